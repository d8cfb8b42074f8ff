#pragma once

#include <httplib.h>

#include <atomic>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "peerreview/coauthorship_graph.hpp"
#include "peerreview/corpus.hpp"
#include "peerreview/oai_provider.hpp"
#include "peerreview/service.hpp"

namespace fixtures {

using namespace peerreview;

inline PaperRecord make_record(const std::string& id, const std::vector<std::string>& creators,
                               const std::vector<std::string>& references = {}, bool journal_ref = false,
                               const std::string& datestamp = "2005-04-23", const std::string& set = "cs") {
    PaperRecord r;
    r.identifier = id;
    r.title = "Record " + id;
    for (const auto& c : creators) r.authors.push_back(normalize_author_name(c));
    for (const auto& ref : references) r.references.push_back(parse_reference(ref));
    if (journal_ref) r.subjects.push_back("Journal-Ref: J. Test. 1 (2005) 1-10");
    r.subjects.push_back("Digital Libraries");
    r.date_stamps.push_back(datestamp);
    r.datestamp = datestamp;
    if (!set.empty()) r.set_specs.push_back(set);
    return r;
}

inline HarvestedRecord harvested(const PaperRecord& r) {
    auto xml = render_dc_record(r);
    auto parsed = extract_records(xml);
    return parsed.front();
}

/// An OAI-PMH repository on an ephemeral local port, backed by a ServiceStore.
class MockRepository {
public:
    explicit MockRepository(const std::vector<PaperRecord>& records, std::size_t page_size = 2) {
        std::vector<HarvestedRecord> hs;
        for (const auto& r : records) hs.push_back(harvested(r));
        store_.ingest(hs);
        port_ = server_.bind_to_any_port("127.0.0.1");
        ProviderOptions opts;
        opts.base_url = url();
        opts.page_size = page_size;
        source_ = std::make_unique<StoreMetadataSource>(store_, PublicationOptions{});
        provider_ = std::make_unique<OaiDataProvider>(*source_, opts);
        server_.Get("/oai", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            res.set_content(provider_->handle(OaiArguments(req.params.begin(), req.params.end())), "text/xml");
        });
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockRepository() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/oai"; }
    int requests() const { return requests_; }
    ServiceStore& store() { return store_; }

private:
    ServiceStore store_;
    std::unique_ptr<StoreMetadataSource> source_;
    std::unique_ptr<OaiDataProvider> provider_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
};

/// Random connected graph: a spanning tree plus extra edges, positive weights.
inline CoauthGraph random_graph(std::mt19937_64& rng, std::size_t n, double extra_edge_p = 0.2) {
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(1000 + i));
    std::uniform_real_distribution<double> w(0.1, 3.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 1; i < n; ++i) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        m[i][j] = m[j][i] = w(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (m[i][j] == 0.0 && u(rng) < extra_edge_p) m[i][j] = m[j][i] = w(rng);
        }
    }
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (m[i][j] > 0.0) edges.push_back({NodeId(i), NodeId(j), m[i][j]});
        }
    }
    return CoauthGraph(nodes, edges);
}

/// The five-author line A-B-C-D-E, one paper per adjacent pair.
inline std::vector<PaperRecord> line_corpus() {
    const std::vector<std::string> names{"Alpha, A.", "Bravo, B.", "Charlie, C.", "Delta, D.", "Echo, E."};
    std::vector<PaperRecord> out;
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        out.push_back(make_record("line:" + std::to_string(i), {names[i], names[i + 1]}));
    }
    return out;
}

} // namespace fixtures
