#include "peerreview/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>

#include "peerreview/errors.hpp"
#include "peerreview/harvester.hpp"
#include "peerreview/xml.hpp"

namespace peerreview {

namespace {

using nlohmann::json;

std::string record_datestamp(const PaperRecord& r) {
    if (!r.datestamp.empty()) return r.datestamp.substr(0, 10);
    if (!r.date_stamps.empty()) return r.date_stamps.back().substr(0, 10);
    return "1970-01-01";
}

std::string item_datestamp(const StoredRecord& r, const std::optional<ReviewRecord>& review) {
    auto stamp = record_datestamp(r.record);
    if (review && review->updated().size() >= 10) stamp = std::max(stamp, review->updated().substr(0, 10));
    return stamp;
}

std::string header_block(const OaiHeader& h, const std::string& pad) {
    std::string out = pad + "<header>\n";
    out += pad + "  <identifier>" + xml::escape_text(h.identifier) + "</identifier>\n";
    out += pad + "  <datestamp>" + xml::escape_text(h.datestamp) + "</datestamp>\n";
    for (const auto& s : h.set_specs) out += pad + "  <setSpec>" + xml::escape_text(s) + "</setSpec>\n";
    return out + pad + "</header>\n";
}

json comments_json(const std::vector<ReviewComment>& comments) {
    json out = json::array();
    for (const auto& c : comments) out.push_back({{"date", c.date}, {"text", c.text}});
    return out;
}

} // namespace

// ---------------------------------------------------------------- store

ServiceStore::ServiceStore(std::optional<std::filesystem::path> directory) : dir_(std::move(directory)) {
    if (!dir_) return;
    std::filesystem::create_directories(*dir_);
    log_.emplace(*dir_ / "reviews");

    std::ifstream in(*dir_ / "records.jsonl");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto raw = json::parse(line).at("raw_xml").get<std::string>();
            for (auto& h : extract_records(raw)) records_[h.record.identifier] = StoredRecord{h.record, h.raw_xml};
        } catch (const json::exception& e) {
            throw DecodeError(std::string("records.jsonl: ") + e.what(), line_no);
        }
    }
    for (auto& [id, review] : log_->load_all()) reviews_.emplace(id, std::move(review));
}

std::size_t ServiceStore::ingest(const std::vector<HarvestedRecord>& records) {
    std::unique_lock lock(mu_);
    std::size_t changed = 0;
    for (const auto& h : records) {
        auto it = records_.find(h.record.identifier);
        if (it != records_.end() && it->second.raw_xml == h.raw_xml) continue;
        records_[h.record.identifier] = StoredRecord{h.record, h.raw_xml};
        ++changed;
    }
    if (changed > 0) persist_records();
    return changed;
}

void ServiceStore::persist_records() const {
    if (!dir_) return;
    const auto path = *dir_ / "records.jsonl";
    const auto tmp = *dir_ / "records.jsonl.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& [id, r] : records_) out << json{{"identifier", id}, {"raw_xml", r.raw_xml}}.dump() << '\n';
        if (!out) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<StoredRecord> ServiceStore::record(const std::string& id) const {
    std::shared_lock lock(mu_);
    const auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> ServiceStore::record_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, r] : records_) ids.push_back(id);
    return ids;
}

std::size_t ServiceStore::record_count() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

std::optional<ReviewRecord> ServiceStore::review(const std::string& id) const {
    std::shared_lock lock(mu_);
    const auto it = reviews_.find(id);
    if (it == reviews_.end()) return std::nullopt;
    return it->second;
}

void ServiceStore::start_review(const ReviewRecord& review) {
    std::unique_lock lock(mu_);
    if (!records_.count(review.record_id())) throw NotFoundError("no harvested record " + review.record_id());
    if (log_) log_->record_solicitation(review);
    reviews_.insert_or_assign(review.record_id(), review);
}

ReviewRecord ServiceStore::submit(const std::string& id, const AuthorKey& referee, double score,
                                  const std::optional<std::string>& comment, const std::string& date) {
    std::unique_lock lock(mu_);
    const auto it = reviews_.find(id);
    if (it == reviews_.end()) throw NotFoundError("record " + id + " is not under review");
    // Validate on a copy so a rejected submission leaves no trace.
    auto updated = upsert_evaluation(it->second, referee, score, comment, date);
    if (log_) {
        log_->record_upsert(id, referee, score, date);
        if (comment && !comment->empty()) log_->record_comment(id, referee, date, *comment);
    }
    it->second = updated;
    return updated;
}

std::vector<std::pair<StoredRecord, std::optional<ReviewRecord>>> ServiceStore::snapshot() const {
    std::shared_lock lock(mu_);
    std::vector<std::pair<StoredRecord, std::optional<ReviewRecord>>> out;
    out.reserve(records_.size());
    for (const auto& [id, r] : records_) {
        const auto rv = reviews_.find(id);
        out.emplace_back(r, rv == reviews_.end() ? std::nullopt : std::optional<ReviewRecord>(rv->second));
    }
    return out;
}

// ---------------------------------------------------------------- OAI source

StoreMetadataSource::StoreMetadataSource(const ServiceStore& store, PublicationOptions options)
    : store_(store), options_(std::move(options)) {}

std::vector<MetadataFormat> StoreMetadataSource::formats() const {
    return {
        {"oai_dc", "http://www.openarchives.org/OAI/2.0/oai_dc.xsd", "http://www.openarchives.org/OAI/2.0/oai_dc/"},
        {"pr", options_.pr_schema_url, std::string(kPrNamespace)},
    };
}

bool StoreMetadataSource::exists(const std::string& identifier) const {
    return store_.record(identifier).has_value();
}

std::optional<OaiItem> StoreMetadataSource::item(const StoredRecord& record, const std::optional<ReviewRecord>& review,
                                                 const std::string& prefix, bool with_metadata) const {
    OaiItem item;
    item.header = OaiHeader{record.record.identifier, item_datestamp(record, review), record.record.set_specs};
    if (prefix == "oai_dc") {
        if (with_metadata) {
            item.record_xml = review ? merge_into_record(record.raw_xml,
                                                         to_pr_review(*review, options_.blind, options_.secret_key),
                                                         options_.merge_policy)
                                     : record.raw_xml;
        }
        return item;
    }
    if (prefix == "pr") {
        if (!review) return std::nullopt;
        if (with_metadata) {
            item.record_xml = "    <record>\n" + header_block(item.header, "      ") + "      <metadata>\n" +
                              render_pr_xml(*review, options_.blind, options_.secret_key, options_.merge_policy, 8) +
                              "\n      </metadata>\n    </record>\n";
        }
        return item;
    }
    return std::nullopt;
}

LookupResult StoreMetadataSource::get(const std::string& identifier, const std::string& prefix) const {
    const auto record = store_.record(identifier);
    if (!record) return {LookupStatus::no_such_id, {}};
    auto found = item(*record, store_.review(identifier), prefix, true);
    if (!found) return {LookupStatus::cannot_disseminate, {}};
    return {LookupStatus::found, std::move(*found)};
}

ListPage StoreMetadataSource::list(const ListQuery& query, std::size_t offset, std::size_t limit,
                                   bool with_metadata) const {
    ListPage page;
    std::size_t index = 0;
    for (const auto& [record, review] : store_.snapshot()) {
        auto header_only = item(record, review, query.prefix, false);
        if (!header_only) continue;
        const auto& h = header_only->header;
        if (query.from && h.datestamp < *query.from) continue;
        if (query.until && h.datestamp > *query.until) continue;
        if (query.set && std::find(h.set_specs.begin(), h.set_specs.end(), *query.set) == h.set_specs.end()) continue;
        if (index >= offset && page.items.size() < limit) {
            page.items.push_back(with_metadata ? *item(record, review, query.prefix, true) : *header_only);
        }
        ++index;
    }
    page.complete_size = index;
    return page;
}

std::string StoreMetadataSource::earliest_datestamp() const {
    std::string earliest;
    for (const auto& [record, review] : store_.snapshot()) {
        const auto d = record_datestamp(record.record);
        if (earliest.empty() || d < earliest) earliest = d;
    }
    return earliest.empty() ? "1970-01-01" : earliest;
}

// ---------------------------------------------------------------- workflow

ReviewRecord solicit(const PaperRecord& record, const StochasticGraph& graph, const DiffusionConfig& cfg,
                     std::size_t top_k, const std::string& date) {
    if (record.references.empty()) throw SolicitationError(record.identifier + " has no references");
    auto ranking = rank_referees(graph, record, cfg);
    if (ranking.referees.empty()) {
        std::string names;
        for (const auto& n : ranking.unmatched) names += (names.empty() ? "" : "; ") + n;
        throw SolicitationError("no referee found for " + record.identifier +
                                (names.empty() ? std::string() : "; referenced authors not in graph: " + names));
    }
    std::vector<std::string> solicited;
    for (const auto& e : ranking.referees.entries()) {
        if (solicited.size() >= top_k) break;
        solicited.push_back(e.author);
    }
    return ReviewRecord(record.identifier, std::move(ranking.referees), std::move(solicited), date);
}

struct PeerReviewService::Publication {
    Publication(const ServiceStore& store, PublicationOptions publication, ProviderOptions options)
        : source(store, std::move(publication)), provider(source, std::move(options)) {}

    StoreMetadataSource source;
    OaiDataProvider provider;
};

PeerReviewService::PeerReviewService(ServiceConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)),
      store_(config_.store_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_.store_dir)) {
    config_.validate();
    if (!config_.graph_path.empty() && std::filesystem::exists(config_.graph_path)) {
        set_graph(load_graph(config_.graph_path));
    }
    if (config_.base_url.empty()) {
        config_.base_url = "http://" + config_.bind_address + ":" + std::to_string(config_.port) + "/oai";
    }
    set_base_url(config_.base_url);
}

PeerReviewService::~PeerReviewService() { stop_background_harvest(); }

void PeerReviewService::set_base_url(const std::string& base_url) {
    config_.base_url = base_url;
    auto origin = base_url;
    if (const auto pos = origin.rfind("/oai"); pos != std::string::npos && pos + 4 == origin.size()) origin.resize(pos);
    ProviderOptions opts;
    opts.base_url = base_url;
    opts.repository_name = config_.repository_name;
    opts.admin_email = config_.admin_email;
    opts.page_size = config_.page_size;
    opts.token_ttl = config_.token_ttl;
    opts.clock = clock_;
    auto publication = std::make_shared<Publication>(
        store_, PublicationOptions{config_.blind, config_.secret_key, config_.merge_policy, origin + "/schema/pr.xsd"},
        opts);
    std::lock_guard lock(publication_mu_);
    publication_ = std::move(publication);
}

void PeerReviewService::set_graph(const CoauthGraph& graph) {
    auto g = std::make_shared<const StochasticGraph>(normalize_out_edges(graph));
    std::unique_lock lock(graph_mu_);
    graph_ = std::move(g);
}

bool PeerReviewService::has_graph() const {
    std::shared_lock lock(graph_mu_);
    return graph_ != nullptr;
}

std::string PeerReviewService::today() const { return format_day(clock_()); }

std::size_t PeerReviewService::harvest_once() {
    std::lock_guard lock(harvest_mu_);
    std::size_t changed = 0;
    for (const auto& upstream : config_.upstreams) {
        try {
            const auto records = harvest(upstream, config_.filter, config_.retry);
            const auto n = store_.ingest(records);
            spdlog::info("harvested {} eligible records from {} ({} new or changed)", records.size(), upstream, n);
            changed += n;
        } catch (const HarvestError& e) {
            spdlog::error("harvest of {} failed: {}", upstream, e.what());
            if (config_.upstreams.size() == 1) throw;
        }
    }
    return changed;
}

void PeerReviewService::start_background_harvest() {
    if (config_.harvest_interval.count() <= 0 || config_.upstreams.empty()) return;
    bg_thread_ = std::jthread([this](std::stop_token stop) {
        while (!stop.stop_requested()) {
            try {
                harvest_once();
            } catch (const std::exception& e) {
                spdlog::error("background harvest: {}", e.what());
            }
            std::unique_lock lock(bg_mu_);
            bg_cv_.wait_for(lock, stop, config_.harvest_interval, [] { return false; });
        }
    });
}

void PeerReviewService::stop_background_harvest() {
    if (bg_thread_.joinable()) {
        bg_thread_.request_stop();
        bg_thread_.join();
    }
}

ReviewRecord PeerReviewService::solicit(const std::string& record_id, bool force) {
    const auto record = store_.record(record_id);
    if (!record) throw NotFoundError("no harvested record " + record_id);
    if (!force && store_.review(record_id)) throw SolicitationError(record_id + " is already under review");
    std::shared_ptr<const StochasticGraph> graph;
    {
        std::shared_lock lock(graph_mu_);
        graph = graph_;
    }
    if (!graph) throw ConfigurationError("no co-authorship graph loaded");
    auto review = peerreview::solicit(record->record, *graph, config_.diffusion, config_.top_k, today());
    store_.start_review(review);
    notify(review);
    return review;
}

void PeerReviewService::notify(const ReviewRecord& review) {
    auto origin = config_.base_url;
    if (const auto pos = origin.rfind("/oai"); pos != std::string::npos) origin.resize(pos);
    json invitations = json::array();
    for (const auto& name : review.solicited()) {
        json inv{{"referee", name}, {"influence", review.roster().influence_of(name).value_or(0.0)}};
        const auto token = referee_token(review.record_id(), name);
        std::string link = origin + "/console/?record=" + httplib::detail::encode_query_param(review.record_id()) +
                           "&referee=" + httplib::detail::encode_query_param(name);
        if (!token.empty()) link += "&token=" + token;
        inv["link"] = link;
        invitations.push_back(std::move(inv));
        spdlog::info("solicited {} for {}", name, review.record_id());
    }
    const json event{{"event", "solicitation"}, {"record_id", review.record_id()}, {"date", review.updated()},
                     {"invitations", invitations}};
    if (!config_.store_dir.empty()) {
        std::ofstream out(std::filesystem::path(config_.store_dir) / "notifications.jsonl", std::ios::app);
        out << event.dump() << '\n';
    }
    if (!config_.webhook_url.empty()) {
        try {
            const auto scheme_end = config_.webhook_url.find("://");
            const auto slash = config_.webhook_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
            httplib::Client client(config_.webhook_url.substr(0, slash));
            client.set_connection_timeout(config_.retry.timeout);
            const auto res = client.Post(slash == std::string::npos ? "/" : config_.webhook_url.substr(slash),
                                         event.dump(), "application/json");
            if (!res || res->status >= 300) spdlog::warn("solicitation webhook {} failed", config_.webhook_url);
        } catch (const std::exception& e) {
            spdlog::warn("solicitation webhook {}: {}", config_.webhook_url, e.what());
        }
    }
}

std::string PeerReviewService::referee_token(const std::string& record_id, const std::string& canonical) const {
    if (config_.secret_key.empty()) return {};
    return hmac_sha256_hex(config_.secret_key, "token\n" + record_id + "\n" + canonical).substr(0, 32);
}

std::string PeerReviewService::published_name(const std::string& record_id, const AuthorKey& referee) const {
    if (config_.blind) return pseudonymize(referee.canonical, record_id, config_.secret_key);
    return referee.display.empty() ? referee.canonical : referee.display;
}

SubmissionResult PeerReviewService::submit_evaluation(const std::string& record_id, const std::string& referee,
                                                      double score, const std::optional<std::string>& comment,
                                                      const std::string& token) {
    if (!store_.record(record_id)) throw NotFoundError("no harvested record " + record_id);
    const auto current = store_.review(record_id);
    if (!current) throw NotFoundError("record " + record_id + " is not under review");

    const auto key = normalize_author_name(referee);
    if (!config_.secret_key.empty() && token != referee_token(record_id, key.canonical)) {
        throw AuthorizationError("invalid referee token for " + key.canonical);
    }
    const auto influence = current->roster().influence_of(key.canonical);
    if (!influence || !(*influence > 0.0)) {
        throw AuthorizationError(key.canonical + " is not on the referee roster of " + record_id);
    }
    if (!(score >= 0.0 && score <= 1.0)) {
        throw ValidationError("score " + std::to_string(score) + " is outside the range [0,1]");
    }

    ReviewRecord updated;
    try {
        updated = store_.submit(record_id, key, score, comment, today());
    } catch (const SolicitationError& e) {
        throw AuthorizationError(e.what());
    }
    const auto* mine = updated.find(key.canonical);
    return SubmissionResult{updated.evaluation(), updated.stability(), published_name(record_id, key),
                            mine ? mine->influence : *influence};
}

nlohmann::json PeerReviewService::review_json(const std::string& record_id) const {
    const auto record = store_.record(record_id);
    if (!record) throw NotFoundError("no harvested record " + record_id);
    const auto review = store_.review(record_id);
    if (!review) throw NotFoundError("record " + record_id + " is not under review");

    json creators = json::array();
    for (const auto& a : record->record.authors) creators.push_back(a.display.empty() ? a.canonical : a.display);
    json referees = json::array();
    for (const auto& e : review->evaluations()) {
        referees.push_back({{"name", published_name(record_id, e.referee)},
                            {"influence", e.influence},
                            {"evaluation", e.evaluation},
                            {"comments", comments_json(e.comments)}});
    }
    json roster = json::array();
    for (const auto& e : review->roster().entries()) {
        const AuthorKey key{e.author, e.author};
        const bool solicited =
            std::find(review->solicited().begin(), review->solicited().end(), e.author) != review->solicited().end();
        roster.push_back({{"name", published_name(record_id, key)}, {"influence", e.influence}, {"solicited", solicited}});
    }
    return json{{"record_id", record_id},
                {"title", record->record.title},
                {"creators", creators},
                {"evaluation", review->evaluation() ? json(*review->evaluation()) : json(nullptr)},
                {"stability", review->stability()},
                {"updated", review->updated()},
                {"referees", referees},
                {"roster", roster}};
}

std::string PeerReviewService::export_pr(const std::string& record_id) const {
    const auto review = store_.review(record_id);
    if (!review) throw NotFoundError("record " + record_id + " is not under review");
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n" +
           render_pr_xml(*review, config_.blind, config_.secret_key, config_.merge_policy) + "\n";
}

std::string PeerReviewService::handle_oai(const OaiArguments& args) {
    std::shared_ptr<Publication> publication;
    {
        std::lock_guard lock(publication_mu_);
        publication = publication_;
    }
    return publication->provider.handle(args);
}

} // namespace peerreview
