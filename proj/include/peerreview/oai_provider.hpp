#pragma once

// Minimal OAI-PMH data provider: Identify, ListMetadataFormats, GetRecord,
// ListRecords and ListIdentifiers over a pluggable record source. Protocol
// errors are reported in-band as <error> elements.

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace peerreview {

inline constexpr std::string_view kOaiNamespace = "http://www.openarchives.org/OAI/2.0/";

using Clock = std::function<std::chrono::system_clock::time_point()>;

/// UTC day of `t` as YYYY-MM-DD.
std::string format_day(std::chrono::system_clock::time_point t);
/// UTC time of `t` as YYYY-MM-DDThh:mm:ssZ.
std::string format_utc(std::chrono::system_clock::time_point t);

struct MetadataFormat {
    std::string prefix;
    std::string schema;
    std::string metadata_namespace;
};

struct OaiHeader {
    std::string identifier;
    std::string datestamp;  // day granularity
    std::vector<std::string> set_specs;
};

struct OaiItem {
    OaiHeader header;
    std::string record_xml;  // complete <record> element; empty for header-only listings
};

struct ListQuery {
    std::string prefix;
    std::optional<std::string> from;
    std::optional<std::string> until;
    std::optional<std::string> set;
};

struct ListPage {
    std::vector<OaiItem> items;
    std::size_t complete_size = 0;
};

enum class LookupStatus { found, no_such_id, cannot_disseminate };

struct LookupResult {
    LookupStatus status = LookupStatus::no_such_id;
    OaiItem item;
};

/// What the provider exposes. Each call must be atomic with respect to
/// concurrent updates of the underlying store.
class MetadataSource {
public:
    virtual ~MetadataSource() = default;
    virtual std::vector<MetadataFormat> formats() const = 0;
    virtual bool exists(const std::string& identifier) const = 0;
    virtual LookupResult get(const std::string& identifier, const std::string& prefix) const = 0;
    /// Items matching the query, ordered by identifier, from `offset`.
    virtual ListPage list(const ListQuery& query, std::size_t offset, std::size_t limit, bool with_metadata) const = 0;
    virtual std::string earliest_datestamp() const { return "1970-01-01"; }
};

struct ProviderOptions {
    std::string base_url = "http://localhost/oai";
    std::string repository_name = "Peer Review Service";
    std::string admin_email = "admin@localhost";
    std::size_t page_size = 100;
    std::chrono::seconds token_ttl{3600};
    Clock clock = [] { return std::chrono::system_clock::now(); };
};

using OaiArguments = std::multimap<std::string, std::string>;

class OaiDataProvider {
public:
    OaiDataProvider(const MetadataSource& source, ProviderOptions options);

    /// Full OAI-PMH response document for one request. Thread-safe.
    std::string handle(const OaiArguments& args);

private:
    struct Cursor {
        ListQuery query;
        std::size_t offset;
        std::chrono::system_clock::time_point expires;
    };

    std::string list(const std::string& verb, const OaiArguments& args, std::string& request_attrs);
    std::string issue_token(const ListQuery& query, std::size_t offset);

    const MetadataSource& source_;
    ProviderOptions options_;
    std::mutex tokens_mu_;
    std::map<std::string, Cursor> tokens_;
    std::uint64_t token_counter_ = 0;
    std::uint64_t token_salt_;
};

} // namespace peerreview
