#include "peerreview/harvester.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>
#include <thread>

#include "peerreview/errors.hpp"
#include "peerreview/xml.hpp"

namespace peerreview {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw HarvestError("not an absolute URL: " + url);
    if (url.compare(0, scheme_end, "http") != 0) throw HarvestError("unsupported URL scheme: " + url);
    const auto slash = url.find('/', scheme_end + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

// Code of the in-band <error>, if the response carries one.
std::optional<std::string> protocol_error(const xml::Element& root) {
    const auto* error = root.child("error");
    if (error == nullptr) return std::nullopt;
    return error->attribute("code").value_or("unknown");
}

} // namespace

void HarvestFilter::validate() const {
    if (!require_no_journal_ref && !set_spec && !explicit_ids && !min_reference_count) {
        throw ValidationError("harvest filter has no active criterion");
    }
}

bool HarvestFilter::accepts(const PaperRecord& record) const {
    if (require_no_journal_ref && record.journal_ref_present) return false;
    if (set_spec && !record.set_specs.empty() &&
        std::find(record.set_specs.begin(), record.set_specs.end(), *set_spec) == record.set_specs.end()) {
        return false;
    }
    if (explicit_ids &&
        std::find(explicit_ids->begin(), explicit_ids->end(), record.identifier) == explicit_ids->end()) {
        return false;
    }
    if (min_reference_count && record.references.size() < *min_reference_count) return false;
    return true;
}

std::string http_get(const std::string& base_url, const std::multimap<std::string, std::string>& params,
                     const HttpRetryPolicy& retry) {
    const auto endpoint = split_url(base_url);
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(retry.timeout);
    client.set_read_timeout(retry.timeout);

    auto backoff = retry.backoff;
    std::string last_error;
    const unsigned attempts = std::max(1u, retry.attempts);
    for (unsigned attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Get(endpoint.path, params, httplib::Headers{});
        if (res && res->status == 200) return res->body;
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        spdlog::warn("GET {} failed ({}), attempt {}/{}", base_url, last_error, attempt, attempts);
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw HarvestError("GET " + base_url + " failed: " + last_error);
}

std::vector<HarvestedRecord> harvest(const std::string& base_url, const HarvestFilter& filter,
                                     const HttpRetryPolicy& retry) {
    filter.validate();
    std::vector<HarvestedRecord> out;
    std::set<std::string> seen;
    auto keep = [&](HarvestedRecord&& r) {
        if (!filter.accepts(r.record)) return;
        if (!seen.insert(r.record.identifier).second) return;
        out.push_back(std::move(r));
    };

    if (filter.explicit_ids) {
        for (const auto& id : *filter.explicit_ids) {
            const auto body =
                http_get(base_url, {{"verb", "GetRecord"}, {"identifier", id}, {"metadataPrefix", "oai_dc"}}, retry);
            const auto root = xml::parse(body);
            if (auto code = protocol_error(root)) {
                throw HarvestError("GetRecord " + id + ": upstream error " + *code, *code);
            }
            for (auto& r : extract_records(body)) keep(std::move(r));
        }
        return out;
    }

    std::multimap<std::string, std::string> params{{"verb", "ListRecords"}, {"metadataPrefix", "oai_dc"}};
    if (filter.set_spec) params.emplace("set", *filter.set_spec);
    std::set<std::string> tokens_seen;
    while (true) {
        const auto body = http_get(base_url, params, retry);
        const auto root = xml::parse(body);
        if (auto code = protocol_error(root)) {
            if (*code == "noRecordsMatch") break;
            throw HarvestError("ListRecords: upstream error " + *code, *code);
        }
        for (auto& r : extract_records(body)) keep(std::move(r));

        const auto* list = root.child("ListRecords");
        const auto* token_el = list ? list->child("resumptionToken") : nullptr;
        const auto token = token_el ? std::string(xml::trim(token_el->text)) : std::string();
        if (token.empty()) break;
        if (!tokens_seen.insert(token).second) throw HarvestError("upstream repeated resumption token " + token);
        params = {{"verb", "ListRecords"}, {"resumptionToken", token}};
    }
    return out;
}

std::optional<PrReview> fetch_peer_review(const std::string& base_url, const std::string& identifier,
                                          const HttpRetryPolicy& retry) {
    const auto body =
        http_get(base_url, {{"verb", "GetRecord"}, {"identifier", identifier}, {"metadataPrefix", "pr"}}, retry);
    const auto root = xml::parse(body);
    if (auto code = protocol_error(root)) {
        if (*code == "idDoesNotExist" || *code == "cannotDisseminateFormat") return std::nullopt;
        throw HarvestError("GetRecord " + identifier + ": upstream error " + *code, *code);
    }
    const auto* record = root.find("record");
    const auto* metadata = record ? record->child("metadata") : nullptr;
    if (metadata == nullptr) throw HarvestError("GetRecord " + identifier + ": response has no metadata");
    return parse_pr_xml(body.substr(metadata->begin_offset, metadata->end_offset - metadata->begin_offset));
}

} // namespace peerreview
