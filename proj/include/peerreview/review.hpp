#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerreview/corpus.hpp"
#include "peerreview/influence.hpp"

namespace peerreview {

struct ReviewComment {
    std::string date;  // YYYY-MM-DD
    std::string text;

    friend bool operator==(const ReviewComment&, const ReviewComment&) = default;
};

struct RefereeEvaluation {
    AuthorKey referee;
    double influence = 0.0;   // frozen from the roster when the referee first submits
    double evaluation = 0.0;  // in [0, 1]
    std::vector<ReviewComment> comments;
};

/// Influence-weighted mean of the scores. nullopt when there are no
/// evaluations or their influences sum to zero. Throws ValidationError if an
/// influence or score lies outside [0, 1].
std::optional<double> collective_evaluation(std::span<const RefereeEvaluation> evaluations);

/// Sum of the active referees' influence. Throws ValidationError if the sum
/// exceeds 1 (+1e-9), which means the influences were not normalized.
double stability(std::span<const RefereeEvaluation> active);

/// The review of one record: the solicitation roster (frozen influence map),
/// the referees who have submitted, and the derived evaluation / stability.
class ReviewRecord {
public:
    ReviewRecord() = default;
    ReviewRecord(std::string record_id, InfluenceMap roster, std::vector<std::string> solicited = {},
                 std::string created = {});

    const std::string& record_id() const { return record_id_; }
    const InfluenceMap& roster() const { return roster_; }
    const std::vector<std::string>& solicited() const { return solicited_; }
    /// Active referees in order of first submission.
    const std::vector<RefereeEvaluation>& evaluations() const { return evaluations_; }
    const RefereeEvaluation* find(std::string_view canonical) const;

    std::optional<double> evaluation() const { return evaluation_; }
    double stability() const { return stability_; }
    /// Date of the last change (solicitation or submission).
    const std::string& updated() const { return updated_; }

    /// Adds or replaces the referee's score and appends the comment, if any.
    /// Throws SolicitationError if the referee has no positive influence in
    /// the roster, ValidationError for a score outside [0, 1].
    void apply_evaluation(const AuthorKey& referee, double score, const std::optional<std::string>& comment,
                          const std::string& date);
    /// Appends a comment for a referee who has already submitted a score.
    void add_comment(const AuthorKey& referee, const std::string& date, const std::string& text);

private:
    void recompute();

    std::string record_id_;
    InfluenceMap roster_;
    std::vector<std::string> solicited_;
    std::vector<RefereeEvaluation> evaluations_;
    std::optional<double> evaluation_;
    double stability_ = 0.0;
    std::string updated_;
};

ReviewRecord upsert_evaluation(ReviewRecord review, const AuthorKey& referee, double score,
                               const std::optional<std::string>& comment, const std::string& date);

/// Keyed label "anon-<12 hex>" from HMAC-SHA256(secret, record_id "\n"
/// canonical). Stable for a referee within one record, different across
/// records. Throws ConfigurationError when the secret is empty.
std::string pseudonymize(std::string_view referee, std::string_view record_id, std::string_view secret);

/// Lowercase hex HMAC-SHA256.
std::string hmac_sha256_hex(std::string_view key, std::string_view message);

/// Append-only event log, one file per reviewed record. Each line is a JSON
/// event (solicit, upsert or comment); loading replays them in order.
class ReviewLog {
public:
    explicit ReviewLog(std::filesystem::path directory);

    /// Starts a new log for the record, replacing any previous one.
    void record_solicitation(const ReviewRecord& review);
    void record_upsert(const std::string& record_id, const AuthorKey& referee, double score, const std::string& date);
    void record_comment(const std::string& record_id, const AuthorKey& referee, const std::string& date,
                        const std::string& text);

    std::optional<ReviewRecord> load(const std::string& record_id) const;
    std::map<std::string, ReviewRecord> load_all() const;

    std::filesystem::path path_for(const std::string& record_id) const;

private:
    void append(const std::string& record_id, const std::string& line);

    std::filesystem::path dir_;
};

} // namespace peerreview
