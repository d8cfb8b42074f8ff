#include "peerreview/review.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "peerreview/errors.hpp"

namespace peerreview {

namespace {

using nlohmann::json;

void check_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError(std::string(what) + " " + std::to_string(v) + " is outside the range [0,1]");
    }
}

std::string hex_encode(std::string_view bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out += digits[c >> 4];
        out += digits[c & 0xF];
    }
    return out;
}

json author_json(const AuthorKey& a) { return json{{"canonical", a.canonical}, {"display", a.display}}; }

} // namespace

std::optional<double> collective_evaluation(std::span<const RefereeEvaluation> evaluations) {
    // Extended-precision sums, rounded once by the final division.
    long double weighted = 0.0L;
    long double weight = 0.0L;
    for (const auto& e : evaluations) {
        check_unit(e.influence, "influence");
        check_unit(e.evaluation, "evaluation");
        weighted += static_cast<long double>(e.influence) * static_cast<long double>(e.evaluation);
        weight += static_cast<long double>(e.influence);
    }
    if (weight == 0.0L) return std::nullopt;
    return static_cast<double>(weighted / weight);
}

double stability(std::span<const RefereeEvaluation> active) {
    long double sum = 0.0L;
    for (const auto& e : active) {
        check_unit(e.influence, "influence");
        sum += static_cast<long double>(e.influence);
    }
    const auto s = static_cast<double>(sum);
    if (s > 1.0 + 1e-9) throw ValidationError("stability " + std::to_string(s) + " exceeds 1; roster influence is not normalized");
    return std::min(s, 1.0);
}

ReviewRecord::ReviewRecord(std::string record_id, InfluenceMap roster, std::vector<std::string> solicited,
                           std::string created)
    : record_id_(std::move(record_id)), roster_(std::move(roster)), solicited_(std::move(solicited)),
      updated_(std::move(created)) {
    if (record_id_.empty()) throw ValidationError("review record id is empty");
}

const RefereeEvaluation* ReviewRecord::find(std::string_view canonical) const {
    for (const auto& e : evaluations_) {
        if (e.referee.canonical == canonical) return &e;
    }
    return nullptr;
}

void ReviewRecord::apply_evaluation(const AuthorKey& referee, double score, const std::optional<std::string>& comment,
                                    const std::string& date) {
    const auto influence = roster_.influence_of(referee.canonical);
    if (!influence || !(*influence > 0.0)) {
        throw SolicitationError(referee.canonical + " is not on the referee roster of " + record_id_);
    }
    check_unit(score, "score");

    auto it = std::find_if(evaluations_.begin(), evaluations_.end(),
                           [&](const RefereeEvaluation& e) { return e.referee.canonical == referee.canonical; });
    if (it == evaluations_.end()) {
        evaluations_.push_back(RefereeEvaluation{referee, *influence, score, {}});
        it = std::prev(evaluations_.end());
    } else {
        it->evaluation = score;
    }
    if (comment && !comment->empty()) it->comments.push_back(ReviewComment{date, *comment});
    if (!date.empty()) updated_ = date;
    recompute();
}

void ReviewRecord::add_comment(const AuthorKey& referee, const std::string& date, const std::string& text) {
    auto it = std::find_if(evaluations_.begin(), evaluations_.end(),
                           [&](const RefereeEvaluation& e) { return e.referee.canonical == referee.canonical; });
    if (it == evaluations_.end()) throw SolicitationError(referee.canonical + " has not submitted an evaluation");
    it->comments.push_back(ReviewComment{date, text});
    if (!date.empty()) updated_ = date;
}

void ReviewRecord::recompute() {
    evaluation_ = collective_evaluation(evaluations_);
    stability_ = peerreview::stability(evaluations_);
}

ReviewRecord upsert_evaluation(ReviewRecord review, const AuthorKey& referee, double score,
                               const std::optional<std::string>& comment, const std::string& date) {
    review.apply_evaluation(referee, score, comment, date);
    return review;
}

std::string hmac_sha256_hex(std::string_view key, std::string_view message) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
             reinterpret_cast<const unsigned char*>(message.data()), message.size(), digest, &len) == nullptr) {
        throw InternalError("HMAC computation failed");
    }
    return hex_encode(std::string_view(reinterpret_cast<const char*>(digest), len));
}

std::string pseudonymize(std::string_view referee, std::string_view record_id, std::string_view secret) {
    if (secret.empty()) throw ConfigurationError("single-blind mode requires a secret key");
    std::string message(record_id);
    message += '\n';
    message += referee;
    return "anon-" + hmac_sha256_hex(secret, message).substr(0, 12);
}

ReviewLog::ReviewLog(std::filesystem::path directory) : dir_(std::move(directory)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ReviewLog::path_for(const std::string& record_id) const {
    return dir_ / (hex_encode(record_id) + ".log");
}

void ReviewLog::append(const std::string& record_id, const std::string& line) {
    std::ofstream out(path_for(record_id), std::ios::app);
    if (!out) throw Error("cannot append to review log for " + record_id);
    out << line << '\n';
    out.flush();
    if (!out) throw Error("write failed on review log for " + record_id);
}

void ReviewLog::record_solicitation(const ReviewRecord& review) {
    json roster = json::array();
    for (const auto& e : review.roster().entries()) roster.push_back(json::array({e.author, e.influence}));
    const json event{{"event", "solicit"},       {"record_id", review.record_id()}, {"roster", roster},
                     {"solicited", review.solicited()}, {"date", review.updated()}};
    std::ofstream out(path_for(review.record_id()), std::ios::trunc);
    if (!out) throw Error("cannot create review log for " + review.record_id());
    out << event.dump() << '\n';
}

void ReviewLog::record_upsert(const std::string& record_id, const AuthorKey& referee, double score,
                              const std::string& date) {
    append(record_id, json{{"event", "upsert"}, {"referee", author_json(referee)}, {"score", score}, {"date", date}}.dump());
}

void ReviewLog::record_comment(const std::string& record_id, const AuthorKey& referee, const std::string& date,
                               const std::string& text) {
    append(record_id,
           json{{"event", "comment"}, {"referee", author_json(referee)}, {"date", date}, {"text", text}}.dump());
}

std::optional<ReviewRecord> ReviewLog::load(const std::string& record_id) const {
    std::ifstream in(path_for(record_id));
    if (!in) return std::nullopt;

    std::optional<ReviewRecord> review;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto ev = json::parse(line);
            const auto kind = ev.at("event").get<std::string>();
            if (kind == "solicit") {
                std::vector<InfluenceEntry> roster;
                for (const auto& e : ev.at("roster")) roster.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
                review.emplace(ev.at("record_id").get<std::string>(), InfluenceMap(std::move(roster)),
                               ev.at("solicited").get<std::vector<std::string>>(), ev.value("date", ""));
                continue;
            }
            if (!review) throw DecodeError("event before solicitation", line_no);
            const AuthorKey referee{ev.at("referee").at("canonical").get<std::string>(),
                                    ev.at("referee").at("display").get<std::string>()};
            if (kind == "upsert") {
                review->apply_evaluation(referee, ev.at("score").get<double>(), std::nullopt, ev.value("date", ""));
            } else if (kind == "comment") {
                review->add_comment(referee, ev.value("date", ""), ev.at("text").get<std::string>());
            } else {
                throw DecodeError("unknown event '" + kind + "'", line_no);
            }
        } catch (const json::exception& e) {
            throw DecodeError(std::string("review log ") + path_for(record_id).string() + ": " + e.what(), line_no);
        }
    }
    return review;
}

std::map<std::string, ReviewRecord> ReviewLog::load_all() const {
    std::map<std::string, ReviewRecord> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".log") continue;
        std::ifstream in(entry.path());
        std::string first;
        if (!std::getline(in, first)) continue;
        const auto id = json::parse(first).at("record_id").get<std::string>();
        if (auto review = load(id)) out.emplace(id, std::move(*review));
    }
    return out;
}

} // namespace peerreview
