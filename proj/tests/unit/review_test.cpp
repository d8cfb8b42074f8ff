#include <doctest.h>

#include <filesystem>
#include <random>

#include "peerreview/errors.hpp"
#include "peerreview/review.hpp"

using namespace peerreview;

namespace {

RefereeEvaluation ev(double inf, double score) { return RefereeEvaluation{{"r", "r"}, inf, score, {}}; }

AuthorKey key(const char* name) { return normalize_author_name(name); }

InfluenceMap roster() { return InfluenceMap({{"heylighen, f.", 0.5}, {"lindqvist, m.", 0.3}, {"zero, z.", 0.0}, {"x, y.", 0.2}}); }

std::filesystem::path temp_dir(const char* name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("collective evaluation") {
    const std::vector<RefereeEvaluation> two{ev(0.6, 1.0), ev(0.2, 0.5)};
    CHECK(*collective_evaluation(two) == 0.875);
    const std::vector<RefereeEvaluation> one{ev(0.076, 0.65)};
    CHECK(*collective_evaluation(one) == 0.65);
    const std::vector<RefereeEvaluation> same{ev(0.1, 0.9), ev(0.4, 0.9), ev(0.3, 0.9)};
    CHECK(*collective_evaluation(same) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK_FALSE(collective_evaluation({}).has_value());
    const std::vector<RefereeEvaluation> weightless{ev(0.0, 0.3)};
    CHECK_FALSE(collective_evaluation(weightless).has_value());
    const std::vector<RefereeEvaluation> bad{ev(0.2, 1.2)};
    CHECK_THROWS_AS(collective_evaluation(bad), ValidationError);
}

TEST_CASE("stability") {
    const std::vector<RefereeEvaluation> sample{ev(0.076, 0.65), ev(0.424, 0.774)};
    CHECK(stability(sample) == 0.5);
    CHECK(stability({}) == 0.0);
    const std::vector<RefereeEvaluation> over{ev(0.7, 0.5), ev(0.6, 0.5)};
    CHECK_THROWS_AS(stability(over), ValidationError);
}

TEST_CASE("upserts") {
    ReviewRecord r("oai:x:1", InfluenceMap({{"a, a.", 0.5}, {"b, b.", 0.5}}));
    CHECK_FALSE(r.evaluation().has_value());
    CHECK(r.stability() == 0.0);

    r = upsert_evaluation(r, key("A, A."), 0.8, std::nullopt, "2005-11-30");
    CHECK(*r.evaluation() == 0.8);
    CHECK(r.stability() == 0.5);

    r = upsert_evaluation(r, key("A, A."), 0.6, std::string("second look"), "2005-12-01");
    CHECK(*r.evaluation() == 0.6);
    CHECK(r.stability() == 0.5);
    CHECK(r.evaluations().size() == 1);
    CHECK(r.evaluations()[0].comments.size() == 1);

    const auto before = r;
    CHECK_THROWS_AS(upsert_evaluation(r, key("C, C."), 0.5, std::nullopt, "2005-12-02"), SolicitationError);
    CHECK_THROWS_AS(upsert_evaluation(r, key("B, B."), 1.2, std::nullopt, "2005-12-02"), ValidationError);
    CHECK(*r.evaluation() == *before.evaluation());
    CHECK(r.evaluations().size() == before.evaluations().size());

    const auto again = upsert_evaluation(r, key("A, A."), 0.6, std::nullopt, "2005-12-01");
    CHECK(*again.evaluation() == *r.evaluation());
    CHECK(again.stability() == r.stability());
    CHECK(again.evaluations()[0].comments == r.evaluations()[0].comments);
}

TEST_CASE("zero-influence roster entries cannot submit") {
    ReviewRecord r("oai:x:2", roster());
    CHECK_THROWS_AS(r.apply_evaluation(key("Zero, Z."), 0.5, std::nullopt, "2005-01-01"), SolicitationError);
}

TEST_CASE("aggregation properties over random rosters") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 1 + rng() % 12;
        std::vector<double> raw(n);
        double total = 0.0;
        for (auto& x : raw) total += (x = u(rng) + 1e-3);
        std::vector<InfluenceEntry> entries;
        for (std::size_t i = 0; i < n; ++i) entries.push_back({"r" + std::to_string(i) + ", q.", raw[i] / total});
        ReviewRecord review("oai:x", InfluenceMap(entries));

        double lo = 1.0, hi = 0.0, prev_s = 0.0;
        std::vector<RefereeEvaluation> active;
        for (std::size_t i = 0; i < n; ++i) {
            const double score = u(rng);
            review.apply_evaluation(AuthorKey{entries[i].author, ""}, score, std::nullopt, "");
            active.push_back(RefereeEvaluation{{entries[i].author, ""}, entries[i].influence, score, {}});
            lo = std::min(lo, score);
            hi = std::max(hi, score);
            CHECK(*review.evaluation() >= lo - 1e-15);
            CHECK(*review.evaluation() <= hi + 1e-15);
            CHECK(review.stability() >= prev_s);
            prev_s = review.stability();
        }
        CHECK(std::abs(review.stability() - 1.0) <= 1e-9);

        auto scaled = active;
        for (auto& e : scaled) e.influence *= 0.5;
        CHECK(std::abs(*collective_evaluation(scaled) - *collective_evaluation(active)) <= 1e-12);
    }
}

TEST_CASE("pseudonyms") {
    const std::string rec = "oai:example.org:cs/0601017";
    // Frozen HMAC-SHA256 values computed with an independent implementation.
    CHECK(hmac_sha256_hex("key", "The quick brown fox jumps over the lazy dog") ==
          "f7bc83f430538424b13298e6aa6fb143ef4d59a14946175997479dbc2d1a3cd8");
    CHECK(pseudonymize("heylighen, f.", rec, "test-secret") == "anon-5281a48a8d1f");
    CHECK(pseudonymize("lindqvist, m.", rec, "test-secret") == "anon-14720d50e63a");
    CHECK(pseudonymize("heylighen, f.", "oai:example.org:cs/0601002", "test-secret") == "anon-cc19af9e52fc");
    CHECK(pseudonymize("heylighen, f.", rec, "test-secret") == pseudonymize("heylighen, f.", rec, "test-secret"));
    CHECK_THROWS_AS(pseudonymize("heylighen, f.", rec, ""), ConfigurationError);
}

TEST_CASE("review log replays to the same state") {
    const auto dir = temp_dir("peerreview_log_test");
    ReviewLog log(dir);
    ReviewRecord r("oai:example.org:cs/0601017", roster(), {"heylighen, f.", "lindqvist, m."}, "2005-11-01");
    log.record_solicitation(r);
    r.apply_evaluation(key("Heylighen, Francis"), 0.65, std::string("Line one.\nLine two."), "2005-11-30");
    log.record_upsert(r.record_id(), key("Heylighen, Francis"), 0.65, "2005-11-30");
    log.record_comment(r.record_id(), key("Heylighen, Francis"), "2005-11-30", "Line one.\nLine two.");
    r.apply_evaluation(key("Lindqvist, M."), 0.9, std::nullopt, "2005-12-01");
    log.record_upsert(r.record_id(), key("Lindqvist, M."), 0.9, "2005-12-01");

    const auto back = log.load(r.record_id());
    REQUIRE(back.has_value());
    CHECK(back->evaluation() == r.evaluation());
    CHECK(back->stability() == r.stability());
    CHECK(back->solicited() == r.solicited());
    CHECK(back->roster() == r.roster());
    CHECK(back->updated() == "2005-12-01");
    REQUIRE(back->evaluations().size() == 2);
    CHECK(back->evaluations()[0].referee.display == "Heylighen, Francis");
    CHECK(back->evaluations()[0].comments == r.evaluations()[0].comments);
    CHECK(log.load_all().size() == 1);
    CHECK_FALSE(log.load("missing").has_value());
    std::filesystem::remove_all(dir);
}
