#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "peerreview/review.hpp"

namespace peerreview {

/// Namespace bound to the `pr` prefix. Declared once, on <pr:review>.
inline constexpr std::string_view kPrNamespace = "urn:x-peerreview:pr:1.0";

enum class MergePolicy {
    full,           // review, referees and comments
    referees_only,  // review and referees, comments stripped
    summary_only,   // bare <pr:review> with evaluation and stability
};

MergePolicy parse_merge_policy(std::string_view text);
std::string_view to_string(MergePolicy policy);

struct PrReferee {
    std::string name;
    double influence = 0.0;
    double evaluation = 0.0;
    std::vector<ReviewComment> comments;
};

/// The content of a <pr:review> element.
struct PrReview {
    std::optional<double> evaluation;
    double stability = 0.0;
    std::vector<PrReferee> referees;
};

/// Snapshot of a review for publication. In blind mode referee names are
/// replaced by pseudonyms (requires a secret).
PrReview to_pr_review(const ReviewRecord& review, bool blind = false, std::string_view secret = {});

/// Renders <pr:review>. Evaluation uses three decimals, stability two,
/// influence three, referee scores two or three (trailing zero dropped).
/// Lines are prefixed by `indent` spaces; no trailing newline.
std::string render_pr_xml(const PrReview& review, MergePolicy policy = MergePolicy::full, std::size_t indent = 0);

std::string render_pr_xml(const ReviewRecord& review, bool blind = false, std::string_view secret = {},
                          MergePolicy policy = MergePolicy::full, std::size_t indent = 0);

/// A single <pr:referee> element, as it appears nested in a review.
std::string render_referee_xml(const PrReferee& referee, bool include_comments = true, std::size_t indent = 0);

/// Parses a document whose root is, or contains, a <pr:review>. Accepts `data`
/// or `date` on comments. Throws ParseError for malformed XML and SchemaError
/// for misplaced elements or attributes outside [0, 1].
PrReview parse_pr_xml(std::string_view xml);

/// Inserts the review under the record's <metadata>, next to the existing
/// metadata, replacing any <pr:review> already there. Bytes outside the
/// replaced/inserted ranges are untouched.
std::string merge_into_record(std::string_view record_xml, const PrReview& review, MergePolicy policy);

} // namespace peerreview
