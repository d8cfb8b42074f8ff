#include "peerreview/oai_provider.hpp"

#include <algorithm>
#include <ctime>
#include <random>
#include <set>
#include <sstream>

#include "peerreview/xml.hpp"

namespace peerreview {

namespace {

struct ProtocolError {
    std::string code;
    std::string message;
};

bool is_day(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    return true;
}

// Accepts day or seconds granularity; comparison is by day.
std::optional<std::string> date_argument(const OaiArguments& args, const std::string& key) {
    const auto it = args.find(key);
    if (it == args.end()) return std::nullopt;
    const auto& v = it->second;
    if (is_day(v)) return v;
    if (v.size() == 20 && is_day(v.substr(0, 10)) && v[10] == 'T' && v.back() == 'Z') return v.substr(0, 10);
    throw ProtocolError{"badArgument", "illegal date '" + v + "'"};
}

void check_arguments(const OaiArguments& args, const std::set<std::string>& required,
                     const std::set<std::string>& optional) {
    std::set<std::string> seen;
    for (const auto& [k, v] : args) {
        if (k == "verb") continue;
        if (!seen.insert(k).second) throw ProtocolError{"badArgument", "repeated argument '" + k + "'"};
        if (!required.count(k) && !optional.count(k)) throw ProtocolError{"badArgument", "illegal argument '" + k + "'"};
    }
    for (const auto& r : required) {
        if (!seen.count(r)) throw ProtocolError{"badArgument", "missing argument '" + r + "'"};
    }
}

std::string arg(const OaiArguments& args, const std::string& key) {
    const auto it = args.find(key);
    return it == args.end() ? std::string() : it->second;
}

std::string header_xml(const OaiHeader& h, const std::string& indent) {
    std::ostringstream out;
    out << indent << "<header>\n"
        << indent << "  <identifier>" << xml::escape_text(h.identifier) << "</identifier>\n"
        << indent << "  <datestamp>" << xml::escape_text(h.datestamp) << "</datestamp>\n";
    for (const auto& s : h.set_specs) out << indent << "  <setSpec>" << xml::escape_text(s) << "</setSpec>\n";
    out << indent << "</header>\n";
    return out.str();
}

bool supports(const MetadataSource& source, const std::string& prefix) {
    const auto formats = source.formats();
    return std::any_of(formats.begin(), formats.end(), [&](const MetadataFormat& f) { return f.prefix == prefix; });
}

} // namespace

std::string format_day(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[16];
    std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
    return buf;
}

std::string format_utc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

OaiDataProvider::OaiDataProvider(const MetadataSource& source, ProviderOptions options)
    : source_(source), options_(std::move(options)), token_salt_(std::random_device{}()) {
    if (options_.page_size == 0) options_.page_size = 100;
}

std::string OaiDataProvider::issue_token(const ListQuery& query, std::size_t offset) {
    const auto now = options_.clock();
    std::lock_guard lock(tokens_mu_);
    std::erase_if(tokens_, [&](const auto& kv) { return kv.second.expires <= now; });
    std::ostringstream id;
    id << std::hex << token_salt_ << '-' << ++token_counter_;
    tokens_[id.str()] = Cursor{query, offset, now + options_.token_ttl};
    return id.str();
}

std::string OaiDataProvider::list(const std::string& verb, const OaiArguments& args, std::string& request_attrs) {
    ListQuery query;
    std::size_t offset = 0;
    const bool resumed = args.count("resumptionToken") > 0;
    if (resumed) {
        check_arguments(args, {"resumptionToken"}, {});
        const auto token = arg(args, "resumptionToken");
        request_attrs += " resumptionToken=\"" + xml::escape_attribute(token) + "\"";
        std::lock_guard lock(tokens_mu_);
        const auto it = tokens_.find(token);
        if (it == tokens_.end() || it->second.expires <= options_.clock()) {
            throw ProtocolError{"badResumptionToken", "the resumption token is invalid or expired"};
        }
        query = it->second.query;
        offset = it->second.offset;
        tokens_.erase(it);
    } else {
        check_arguments(args, {"metadataPrefix"}, {"from", "until", "set"});
        query.prefix = arg(args, "metadataPrefix");
        request_attrs += " metadataPrefix=\"" + xml::escape_attribute(query.prefix) + "\"";
        for (const char* k : {"from", "until", "set"}) {
            if (args.count(k)) request_attrs += std::string(" ") + k + "=\"" + xml::escape_attribute(arg(args, k)) + "\"";
        }
        query.from = date_argument(args, "from");
        query.until = date_argument(args, "until");
        if (args.count("set")) query.set = arg(args, "set");
        if (query.from && query.until && *query.from > *query.until) {
            throw ProtocolError{"badArgument", "'from' is later than 'until'"};
        }
        if (!supports(source_, query.prefix)) {
            throw ProtocolError{"cannotDisseminateFormat", "metadata format '" + query.prefix + "' is not supported"};
        }
    }

    const bool with_metadata = verb == "ListRecords";
    auto page = source_.list(query, offset, options_.page_size, with_metadata);
    if (page.complete_size == 0) throw ProtocolError{"noRecordsMatch", "no records match the request"};

    std::ostringstream body;
    body << "  <" << verb << ">\n";
    for (const auto& item : page.items) {
        if (with_metadata) {
            body << item.record_xml;
            if (!item.record_xml.empty() && item.record_xml.back() != '\n') body << '\n';
        } else {
            body << header_xml(item.header, "    ");
        }
    }
    const auto next = offset + page.items.size();
    if (next < page.complete_size) {
        body << "    <resumptionToken completeListSize=\"" << page.complete_size << "\" cursor=\"" << offset << "\">"
             << issue_token(query, next) << "</resumptionToken>\n";
    } else if (resumed) {
        body << "    <resumptionToken completeListSize=\"" << page.complete_size << "\" cursor=\"" << offset << "\"/>\n";
    }
    body << "  </" << verb << ">\n";
    return body.str();
}

std::string OaiDataProvider::handle(const OaiArguments& args) {
    const auto now = options_.clock();
    const auto verb = arg(args, "verb");
    std::string request_attrs;
    std::string body;

    try {
        if (args.count("verb") != 1) throw ProtocolError{"badVerb", "exactly one verb is required"};
        request_attrs = " verb=\"" + xml::escape_attribute(verb) + "\"";
        if (verb == "Identify") {
            check_arguments(args, {}, {});
            std::ostringstream out;
            out << "  <Identify>\n"
                << "    <repositoryName>" << xml::escape_text(options_.repository_name) << "</repositoryName>\n"
                << "    <baseURL>" << xml::escape_text(options_.base_url) << "</baseURL>\n"
                << "    <protocolVersion>2.0</protocolVersion>\n"
                << "    <adminEmail>" << xml::escape_text(options_.admin_email) << "</adminEmail>\n"
                << "    <earliestDatestamp>" << xml::escape_text(source_.earliest_datestamp()) << "</earliestDatestamp>\n"
                << "    <deletedRecord>no</deletedRecord>\n"
                << "    <granularity>YYYY-MM-DD</granularity>\n"
                << "  </Identify>\n";
            body = out.str();
        } else if (verb == "ListMetadataFormats") {
            check_arguments(args, {}, {"identifier"});
            if (args.count("identifier")) {
                const auto id = arg(args, "identifier");
                request_attrs += " identifier=\"" + xml::escape_attribute(id) + "\"";
                if (!source_.exists(id)) throw ProtocolError{"idDoesNotExist", "unknown identifier '" + id + "'"};
            }
            std::ostringstream out;
            out << "  <ListMetadataFormats>\n";
            for (const auto& f : source_.formats()) {
                if (args.count("identifier") &&
                    source_.get(arg(args, "identifier"), f.prefix).status != LookupStatus::found) {
                    continue;
                }
                out << "    <metadataFormat>\n"
                    << "      <metadataPrefix>" << xml::escape_text(f.prefix) << "</metadataPrefix>\n"
                    << "      <schema>" << xml::escape_text(f.schema) << "</schema>\n"
                    << "      <metadataNamespace>" << xml::escape_text(f.metadata_namespace) << "</metadataNamespace>\n"
                    << "    </metadataFormat>\n";
            }
            out << "  </ListMetadataFormats>\n";
            body = out.str();
        } else if (verb == "GetRecord") {
            check_arguments(args, {"identifier", "metadataPrefix"}, {});
            const auto id = arg(args, "identifier");
            const auto prefix = arg(args, "metadataPrefix");
            request_attrs += " identifier=\"" + xml::escape_attribute(id) + "\" metadataPrefix=\"" +
                             xml::escape_attribute(prefix) + "\"";
            if (!supports(source_, prefix)) {
                throw ProtocolError{"cannotDisseminateFormat", "metadata format '" + prefix + "' is not supported"};
            }
            const auto found = source_.get(id, prefix);
            if (found.status == LookupStatus::no_such_id) throw ProtocolError{"idDoesNotExist", "unknown identifier '" + id + "'"};
            if (found.status == LookupStatus::cannot_disseminate) {
                throw ProtocolError{"cannotDisseminateFormat", "'" + id + "' is not available as " + prefix};
            }
            body = "  <GetRecord>\n" + found.item.record_xml;
            if (body.back() != '\n') body += '\n';
            body += "  </GetRecord>\n";
        } else if (verb == "ListRecords" || verb == "ListIdentifiers") {
            body = list(verb, args, request_attrs);
        } else {
            request_attrs.clear();
            throw ProtocolError{"badVerb", "illegal verb '" + verb + "'"};
        }
    } catch (const ProtocolError& e) {
        // Per the protocol, badVerb/badArgument responses echo no attributes.
        if (e.code == "badVerb" || e.code == "badArgument") request_attrs.clear();
        body = "  <error code=\"" + e.code + "\">" + xml::escape_text(e.message) + "</error>\n";
    }

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<OAI-PMH xmlns=\"" << kOaiNamespace << "\""
        << " xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\""
        << " xsi:schemaLocation=\"http://www.openarchives.org/OAI/2.0/ http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd\">\n"
        << "  <responseDate>" << format_utc(now) << "</responseDate>\n"
        << "  <request" << request_attrs << ">" << xml::escape_text(options_.base_url) << "</request>\n"
        << body << "</OAI-PMH>\n";
    return out.str();
}

} // namespace peerreview
