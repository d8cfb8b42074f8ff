#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "peerreview/errors.hpp"
#include "peerreview/pr_metadata.hpp"

using namespace peerreview;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string without_final_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

const char* kComment =
    "Your description of the 'particle-swarm' algorithm is not well explained. Your math\n"
    "formalisms are not clear and the overall subsection is poorly organized.";

PrReview sample_review() {
    PrReview r;
    r.evaluation = 0.755;
    r.stability = 0.5;
    r.referees.push_back({"Heylighen, Francis", 0.076, 0.65,
                          {{"2005-11-30",
                            "Your description of the 'particle-swarm' algorithm is not well explained. Your\n"
                            "math formalisms are not clear and the overall subsection is poorly organized."}}});
    r.referees.push_back({"Lindqvist, Maja", 0.424, 0.774, {}});
    return r;
}

} // namespace

TEST_CASE("referee fragments match the golden files") {
    PrReferee plain{"Heylighen, Francis", 0.076, 0.65, {}};
    CHECK(render_referee_xml(plain) == without_final_newline(read_file(GOLDEN_DIR "/referee_plain.xml")));

    PrReferee commented{"Heylighen, Francis", 0.076, 0.65, {{"2005-11-30", kComment}}};
    CHECK(render_referee_xml(commented) == without_final_newline(read_file(GOLDEN_DIR "/referee_with_comment.xml")));
}

TEST_CASE("review fragment matches the golden file") {
    CHECK(render_pr_xml(sample_review()) == without_final_newline(read_file(GOLDEN_DIR "/pr_review.xml")));
}

TEST_CASE("review element formats") {
    PrReview empty;
    CHECK(render_pr_xml(empty) == "<pr:review stability=\"0.00\" xmlns:pr=\"urn:x-peerreview:pr:1.0\"/>");
    CHECK(render_pr_xml(sample_review(), MergePolicy::summary_only) ==
          "<pr:review evaluation=\"0.755\" stability=\"0.50\" xmlns:pr=\"urn:x-peerreview:pr:1.0\"/>");
    const auto refs_only = render_pr_xml(sample_review(), MergePolicy::referees_only);
    CHECK(refs_only.find("pr:comment") == std::string::npos);
    CHECK(refs_only.find("<pr:referee name=\"Heylighen, Francis\" influence=\"0.076\" evaluation=\"0.65\" />") !=
          std::string::npos);
}

TEST_CASE("blind rendering substitutes names only") {
    ReviewRecord r("oai:example.org:cs/0601017",
                   InfluenceMap({{"heylighen, f.", 0.076}, {"lindqvist, m.", 0.424}, {"other, o.", 0.5}}));
    r.apply_evaluation(normalize_author_name("Heylighen, Francis"), 0.65, std::string("Fine."), "2005-11-30");
    const auto open = render_pr_xml(r);
    const auto blind = render_pr_xml(r, true, "test-secret");
    CHECK(open.find("name=\"Heylighen, Francis\"") != std::string::npos);
    CHECK(blind.find("Heylighen") == std::string::npos);
    CHECK(blind.find("name=\"anon-5281a48a8d1f\"") != std::string::npos);
    auto expected = open;
    expected.replace(expected.find("Heylighen, Francis"), 18, "anon-5281a48a8d1f");
    CHECK(blind == expected);
}

TEST_CASE("parsing") {
    const auto parsed = parse_pr_xml(read_file(GOLDEN_DIR "/pr_review.xml"));
    CHECK(parsed.evaluation == 0.755);
    CHECK(parsed.stability == 0.5);
    REQUIRE(parsed.referees.size() == 2);
    CHECK(parsed.referees[0].comments[0].date == "2005-11-30");
    CHECK(parsed.referees[0].comments[0].text == sample_review().referees[0].comments[0].text);

    const char* with_date = "<pr:review stability=\"0.1\" xmlns:pr=\"urn:x\"><pr:referee name=\"a\" influence=\"0.1\" "
                            "evaluation=\"0.5\"><pr:comment date=\"2005-01-02\">hi</pr:comment></pr:referee></pr:review>";
    const auto lenient = parse_pr_xml(with_date);
    CHECK(lenient.referees[0].comments[0].date == "2005-01-02");
    CHECK(render_pr_xml(lenient).find("<pr:comment data=\"2005-01-02\">") != std::string::npos);
    CHECK_FALSE(lenient.evaluation.has_value());

    CHECK_THROWS_AS(parse_pr_xml("<pr:review evaluation=\"1.7\" stability=\"0.5\"/>"), SchemaError);
    CHECK_THROWS_AS(parse_pr_xml("<pr:review stability=\"-0.1\"/>"), SchemaError);
    CHECK_THROWS_AS(parse_pr_xml("<pr:review stability=\"x\"/>"), SchemaError);
    CHECK_THROWS_AS(parse_pr_xml("<pr:review stability=\"0.5\"><pr:comment data=\"d\">x</pr:comment></pr:review>"),
                    SchemaError);
    // The self-closed referee followed by children and a closing tag is not well-formed.
    CHECK_THROWS_AS(parse_pr_xml("<pr:review stability=\"0.5\"><pr:referee name=\"a\" influence=\"0.1\" "
                                 "evaluation=\"0.6\" /><pr:comment data=\"d\">x</pr:comment></pr:referee></pr:review>"),
                    ParseError);
}

TEST_CASE("parse inverts render on random reviews") {
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> milli(0, 1000);
    const std::vector<std::string> words{"clear", "weak", "novel", "<tag>", "a&b", "\"quoted\"", "it's", "ok"};
    for (int trial = 0; trial < 200; ++trial) {
        PrReview r;
        if (rng() % 5 != 0) r.evaluation = milli(rng) / 1000.0;
        r.stability = milli(rng) / 100 / 10.0;
        const auto n = rng() % 5;
        for (std::size_t i = 0; i < n; ++i) {
            PrReferee ref{"Referee " + std::to_string(i) + (i % 2 ? " & Co" : ""), milli(rng) / 1000.0,
                          milli(rng) / 1000.0, {}};
            for (std::size_t c = rng() % 3; c > 0; --c) {
                std::string text;
                for (std::size_t line = 1 + rng() % 3; line > 0; --line) {
                    if (!text.empty()) text += '\n';
                    for (int w = 0; w < 4; ++w) text += (w ? " " : "") + words[rng() % words.size()];
                }
                ref.comments.push_back({"2006-0" + std::to_string(1 + rng() % 9) + "-1" + std::to_string(rng() % 10), text});
            }
            r.referees.push_back(ref);
        }
        const auto back = parse_pr_xml(render_pr_xml(r));
        CHECK(back.evaluation == r.evaluation);
        CHECK(back.stability == r.stability);
        REQUIRE(back.referees.size() == r.referees.size());
        for (std::size_t i = 0; i < r.referees.size(); ++i) {
            CHECK(back.referees[i].name == r.referees[i].name);
            CHECK(back.referees[i].influence == r.referees[i].influence);
            CHECK(back.referees[i].evaluation == r.referees[i].evaluation);
            CHECK(back.referees[i].comments == r.referees[i].comments);
        }
    }
}

TEST_CASE("merging into a record") {
    const auto original = read_file(TEST_DATA_DIR "/upstream_record.xml");
    const auto summary = merge_into_record(original, sample_review(), MergePolicy::summary_only);
    CHECK(summary == read_file(GOLDEN_DIR "/merged_summary.xml"));

    // The Dublin Core subtree is untouched.
    const auto dc_begin = original.find("<oai_dc:dc");
    const auto dc_end = original.find("</oai_dc:dc>") + 12;
    const auto dc = original.substr(dc_begin, dc_end - dc_begin);
    const auto full = merge_into_record(original, sample_review(), MergePolicy::full);
    CHECK(full.find(dc) != std::string::npos);
    CHECK(full.find("<pr:comment data=\"2005-11-30\">") != std::string::npos);

    auto updated = sample_review();
    updated.evaluation = 0.8;
    const auto twice = merge_into_record(full, updated, MergePolicy::full);
    CHECK(twice.find("<pr:review") == twice.rfind("<pr:review"));
    CHECK(twice.find("evaluation=\"0.800\"") != std::string::npos);
    CHECK(twice.find("evaluation=\"0.755\"") == std::string::npos);
    CHECK(twice.find(dc) != std::string::npos);
    CHECK(merge_into_record(twice, sample_review(), MergePolicy::summary_only) == summary);

    CHECK_THROWS_AS(merge_into_record("<record><header/></record>", sample_review(), MergePolicy::full), SchemaError);
}

TEST_CASE("merge policy names") {
    CHECK(parse_merge_policy("full") == MergePolicy::full);
    CHECK(parse_merge_policy("referees-only") == MergePolicy::referees_only);
    CHECK(parse_merge_policy("summary-only") == MergePolicy::summary_only);
    CHECK(to_string(MergePolicy::referees_only) == "referees-only");
    CHECK_THROWS_AS(parse_merge_policy("everything"), ConfigurationError);
}
