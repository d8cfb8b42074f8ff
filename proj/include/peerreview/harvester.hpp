#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peerreview/corpus.hpp"
#include "peerreview/pr_metadata.hpp"

namespace peerreview {

/// Which upstream records are eligible for review.
struct HarvestFilter {
    bool require_no_journal_ref = false;
    std::optional<std::string> set_spec;
    std::optional<std::vector<std::string>> explicit_ids;
    std::optional<std::size_t> min_reference_count;

    /// Throws ValidationError unless at least one criterion is active.
    void validate() const;
    bool accepts(const PaperRecord& record) const;
};

struct HttpRetryPolicy {
    unsigned attempts = 3;
    std::chrono::milliseconds backoff{100};  // doubled after each failure
    std::chrono::seconds timeout{10};
};

/// GET base_url with the query parameters; returns the body of a 200
/// response. Transport failures and non-200 statuses are retried, then
/// reported as HarvestError.
std::string http_get(const std::string& base_url, const std::multimap<std::string, std::string>& params,
                     const HttpRetryPolicy& retry = {});

/// Pulls oai_dc records from an OAI-PMH endpoint. With explicit_ids each is
/// fetched by GetRecord; otherwise ListRecords is followed through all
/// resumption tokens. Records are deduplicated by identifier and filtered.
/// Protocol errors other than noRecordsMatch become HarvestError carrying the
/// upstream code.
std::vector<HarvestedRecord> harvest(const std::string& base_url, const HarvestFilter& filter,
                                     const HttpRetryPolicy& retry = {});

/// GetRecord with metadataPrefix=pr. nullopt when the provider has no review
/// for the identifier (idDoesNotExist / cannotDisseminateFormat).
std::optional<PrReview> fetch_peer_review(const std::string& base_url, const std::string& identifier,
                                          const HttpRetryPolicy& retry = {});

} // namespace peerreview
