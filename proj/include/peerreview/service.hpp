#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "peerreview/coauthorship_graph.hpp"
#include "peerreview/config.hpp"
#include "peerreview/corpus.hpp"
#include "peerreview/influence.hpp"
#include "peerreview/oai_provider.hpp"
#include "peerreview/pr_metadata.hpp"
#include "peerreview/review.hpp"

namespace peerreview {

struct StoredRecord {
    PaperRecord record;
    std::string raw_xml;  // the upstream <record> element, byte for byte
};

/// Harvested records and their reviews. Reads are shared; every write takes
/// the store exclusively, so submissions are totally ordered. With a
/// directory, records go to records.jsonl and reviews to per-record event logs.
class ServiceStore {
public:
    /// In-memory when no directory is given; otherwise loads what is there.
    explicit ServiceStore(std::optional<std::filesystem::path> directory = std::nullopt);

    /// Adds new records and replaces changed ones. Returns how many were added
    /// or replaced; re-ingesting identical records returns 0.
    std::size_t ingest(const std::vector<HarvestedRecord>& records);

    std::optional<StoredRecord> record(const std::string& id) const;
    std::vector<std::string> record_ids() const;
    std::size_t record_count() const;

    std::optional<ReviewRecord> review(const std::string& id) const;
    /// Installs a freshly solicited review, replacing any previous one.
    void start_review(const ReviewRecord& review);
    /// Applies one submission atomically and returns the updated review.
    ReviewRecord submit(const std::string& id, const AuthorKey& referee, double score,
                        const std::optional<std::string>& comment, const std::string& date);

    /// Consistent copy of everything, for listing.
    std::vector<std::pair<StoredRecord, std::optional<ReviewRecord>>> snapshot() const;

private:
    void persist_records() const;

    mutable std::shared_mutex mu_;
    std::map<std::string, StoredRecord> records_;
    std::map<std::string, ReviewRecord> reviews_;
    std::optional<std::filesystem::path> dir_;
    std::optional<ReviewLog> log_;
};

struct PublicationOptions {
    bool blind = false;
    std::string secret_key;
    MergePolicy merge_policy = MergePolicy::full;
    std::string pr_schema_url;
};

/// Exposes the store over OAI-PMH: `oai_dc` is the upstream record with the
/// review merged in, `pr` is the review alone (reviewed records only).
class StoreMetadataSource : public MetadataSource {
public:
    StoreMetadataSource(const ServiceStore& store, PublicationOptions options);

    std::vector<MetadataFormat> formats() const override;
    bool exists(const std::string& identifier) const override;
    LookupResult get(const std::string& identifier, const std::string& prefix) const override;
    ListPage list(const ListQuery& query, std::size_t offset, std::size_t limit, bool with_metadata) const override;
    std::string earliest_datestamp() const override;

private:
    std::optional<OaiItem> item(const StoredRecord& record, const std::optional<ReviewRecord>& review,
                                const std::string& prefix, bool with_metadata) const;

    const ServiceStore& store_;
    PublicationOptions options_;
};

/// Ranks referees for the record and opens its review: the roster is the
/// full influence map, the first top_k are marked solicited. Throws
/// SolicitationError when the record has no references or no referenced
/// author is in the graph.
ReviewRecord solicit(const PaperRecord& record, const StochasticGraph& graph, const DiffusionConfig& cfg,
                     std::size_t top_k, const std::string& date = {});

struct SubmissionResult {
    std::optional<double> evaluation;
    double stability = 0.0;
    std::string referee;  // as published (pseudonym in blind mode)
    double influence = 0.0;
};

/// The whole workflow: harvest, solicit, accept evaluations, publish.
class PeerReviewService {
public:
    explicit PeerReviewService(ServiceConfig config, Clock clock = [] { return std::chrono::system_clock::now(); });
    ~PeerReviewService();

    const ServiceConfig& config() const { return config_; }
    ServiceStore& store() { return store_; }

    void set_graph(const CoauthGraph& graph);
    bool has_graph() const;

    /// Harvests every configured upstream; returns the number of records
    /// added or replaced.
    std::size_t harvest_once();
    void start_background_harvest();
    void stop_background_harvest();

    /// Solicits referees for a harvested record. An existing review is only
    /// replaced when `force` is set.
    ReviewRecord solicit(const std::string& record_id, bool force = false);

    /// Throws NotFoundError (no such record or review), AuthorizationError
    /// (bad token or not on the roster) or ValidationError (score).
    SubmissionResult submit_evaluation(const std::string& record_id, const std::string& referee, double score,
                                       const std::optional<std::string>& comment, const std::string& token);

    /// Review summary as served to the console; names are pseudonyms in
    /// blind mode.
    nlohmann::json review_json(const std::string& record_id) const;

    /// Standalone <pr:review> document for the record.
    std::string export_pr(const std::string& record_id) const;

    std::string handle_oai(const OaiArguments& args);

    /// Per (record, referee) access token; empty when no secret is configured.
    std::string referee_token(const std::string& record_id, const std::string& canonical) const;

    /// Sets the URL advertised in Identify and solicitation links.
    void set_base_url(const std::string& base_url);

private:
    std::string today() const;
    void notify(const ReviewRecord& review);
    std::string published_name(const std::string& record_id, const AuthorKey& referee) const;

    ServiceConfig config_;
    Clock clock_;
    ServiceStore store_;
    struct Publication;
    std::shared_ptr<Publication> publication_;
    mutable std::mutex publication_mu_;

    mutable std::shared_mutex graph_mu_;
    std::shared_ptr<const StochasticGraph> graph_;

    std::mutex harvest_mu_;
    std::mutex bg_mu_;
    std::condition_variable_any bg_cv_;
    std::jthread bg_thread_;
};

} // namespace peerreview
