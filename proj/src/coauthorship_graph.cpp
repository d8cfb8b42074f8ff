#include "peerreview/coauthorship_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "peerreview/errors.hpp"

namespace peerreview {

namespace {

std::optional<NodeId> find_sorted(const std::vector<std::string>& nodes, std::string_view key) {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), key,
                                     [](const std::string& a, std::string_view b) { return a < b; });
    if (it == nodes.end() || *it != key) return std::nullopt;
    return static_cast<NodeId>(it - nodes.begin());
}

std::string format_weight(double w) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", w);
    return buf;
}

} // namespace

CoauthGraph::CoauthGraph(std::vector<std::string> nodes, std::vector<WeightedEdge> edges, std::size_t paper_count)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), paper_count_(paper_count) {
    if (!std::is_sorted(nodes_.begin(), nodes_.end()) ||
        std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
        throw ValidationError("graph nodes must be unique and sorted");
    }
    const auto n = nodes_.size();
    for (auto& e : edges_) {
        if (e.a > e.b) std::swap(e.a, e.b);
        if (e.a == e.b) throw ValidationError("self-loop on node " + std::to_string(e.a));
        if (e.b >= n) throw ValidationError("edge endpoint out of range");
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) throw ValidationError("edge weight must be positive and finite");
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const WeightedEdge& x, const WeightedEdge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    for (std::size_t i = 1; i < edges_.size(); ++i) {
        if (edges_[i].a == edges_[i - 1].a && edges_[i].b == edges_[i - 1].b) {
            throw ValidationError("duplicate edge " + std::to_string(edges_[i].a) + "-" + std::to_string(edges_[i].b));
        }
    }
    adjacency_.assign(n, {});
    for (const auto& e : edges_) {
        adjacency_[e.a].emplace_back(e.b, e.weight);
        adjacency_[e.b].emplace_back(e.a, e.weight);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::optional<NodeId> CoauthGraph::find(std::string_view canonical) const { return find_sorted(nodes_, canonical); }

double CoauthGraph::weight(std::string_view a, std::string_view b) const {
    const auto ia = find(a);
    const auto ib = find(b);
    if (!ia || !ib) return 0.0;
    for (const auto& [nb, w] : adjacency_[*ia]) {
        if (nb == *ib) return w;
    }
    return 0.0;
}

StochasticGraph::StochasticGraph(std::vector<std::string> nodes, std::vector<std::vector<Transition>> out_edges)
    : nodes_(std::move(nodes)), out_(std::move(out_edges)) {
    if (out_.size() != nodes_.size()) throw ValidationError("out-edge table does not match node count");
    cumulative_.resize(out_.size());
    for (std::size_t i = 0; i < out_.size(); ++i) {
        double acc = 0.0;
        for (const auto& t : out_[i]) {
            if (t.target >= nodes_.size()) throw ValidationError("transition target out of range");
            if (!(t.probability >= 0.0 && t.probability <= 1.0)) throw ValidationError("probability outside [0,1]");
            acc += t.probability;
            cumulative_[i].push_back(acc);
        }
        if (!cumulative_[i].empty()) {
            if (std::abs(acc - 1.0) > 1e-9) throw ValidationError("out-distribution of node " + nodes_[i] + " does not sum to 1");
            cumulative_[i].back() = 1.0;
        }
    }
}

std::optional<NodeId> StochasticGraph::find(std::string_view canonical) const { return find_sorted(nodes_, canonical); }

double paper_tie_strength(long long author_count) {
    if (author_count <= 0) throw ValidationError("author count must be >= 1");
    if (author_count == 1) return 0.0;
    return 1.0 / static_cast<double>(author_count - 1);
}

void GraphBuilder::add_paper(const std::vector<AuthorKey>& authors) {
    std::set<std::string> distinct;
    for (const auto& a : authors) distinct.insert(a.canonical);
    ++papers_;
    for (const auto& a : distinct) ++nodes_[a];
    if (distinct.size() < 2) return;

    const std::vector<std::string> ordered(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        for (std::size_t j = i + 1; j < ordered.size(); ++j) {
            ++tallies_[{ordered[i], ordered[j]}][ordered.size()];
        }
    }
}

CoauthGraph GraphBuilder::build() const {
    std::vector<std::string> nodes;
    nodes.reserve(nodes_.size());
    for (const auto& [name, _] : nodes_) nodes.push_back(name);

    std::vector<WeightedEdge> edges;
    edges.reserve(tallies_.size());
    for (const auto& [pair, by_size] : tallies_) {
        double w = 0.0;
        for (const auto& [size, count] : by_size) {
            const double m = paper_tie_strength(static_cast<long long>(size));
            for (std::uint64_t k = 0; k < count; ++k) w += m;
        }
        const auto a = *find_sorted(nodes, pair.first);
        const auto b = *find_sorted(nodes, pair.second);
        edges.push_back(WeightedEdge{a, b, w});
    }
    return CoauthGraph(std::move(nodes), std::move(edges), papers_);
}

CoauthGraph build_graph(const std::vector<PaperRecord>& corpus) {
    GraphBuilder builder;
    for (const auto& r : corpus) builder.add_paper(r);
    return builder.build();
}

std::vector<double> normalize_weights(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> out;
    out.reserve(weights.size());
    for (double w : weights) out.push_back(w / total);
    return out;
}

StochasticGraph normalize_out_edges(const CoauthGraph& graph) {
    std::vector<std::vector<StochasticGraph::Transition>> out(graph.node_count());
    std::vector<double> raw;
    for (NodeId i = 0; i < graph.node_count(); ++i) {
        const auto nbrs = graph.neighbors(i);
        raw.clear();
        for (const auto& [_, w] : nbrs) raw.push_back(w);
        const auto probs = normalize_weights(raw);
        out[i].reserve(nbrs.size());
        for (std::size_t k = 0; k < nbrs.size(); ++k) out[i].push_back({nbrs[k].first, probs[k]});
    }
    return StochasticGraph(graph.nodes(), std::move(out));
}

void encode_graph(std::ostream& out, const CoauthGraph& graph) {
    out << "coauth-graph v1 nodes=" << graph.node_count() << " edges=" << graph.edge_count() << '\n';
    for (const auto& n : graph.nodes()) out << "N " << n << '\n';
    for (const auto& e : graph.edges()) out << "E " << e.a << ' ' << e.b << ' ' << format_weight(e.weight) << '\n';
}

std::string encode_graph(const CoauthGraph& graph) {
    std::ostringstream out;
    encode_graph(out, graph);
    return out.str();
}

CoauthGraph decode_graph(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    auto parse_count = [&](std::string_view field, std::string_view key) {
        if (field.substr(0, key.size()) != key) throw DecodeError("expected '" + std::string(key) + "'", line_no);
        std::size_t value = 0;
        const auto digits = field.substr(key.size());
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec != std::errc{} || ptr != digits.data() + digits.size()) throw DecodeError("bad count", line_no);
        return value;
    };

    if (!std::getline(in, line)) throw DecodeError("missing header", 1);
    ++line_no;
    std::istringstream header(line);
    std::string magic, version, nodes_field, edges_field, extra;
    header >> magic >> version >> nodes_field >> edges_field;
    if (magic != "coauth-graph" || version != "v1" || (header >> extra)) throw DecodeError("bad header", line_no);
    const auto n = parse_count(nodes_field, "nodes=");
    const auto m = parse_count(edges_field, "edges=");

    std::vector<std::string> nodes;
    nodes.reserve(n);
    // Directed entries as written, to detect asymmetric duplicates.
    std::map<std::pair<NodeId, NodeId>, std::pair<double, std::size_t>> written;
    std::size_t edge_lines = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("N ", 0) == 0) {
            if (edge_lines > 0) throw DecodeError("node line after edge lines", line_no);
            auto name = line.substr(2);
            if (name.empty()) throw DecodeError("empty node name", line_no);
            if (!nodes.empty() && !(nodes.back() < name)) throw DecodeError("nodes not in strictly increasing order", line_no);
            nodes.push_back(std::move(name));
        } else if (line.rfind("E ", 0) == 0) {
            ++edge_lines;
            std::istringstream fields(line.substr(2));
            long long i = -1, j = -1;
            std::string wtext;
            if (!(fields >> i >> j >> wtext) || (fields >> extra)) throw DecodeError("malformed edge line", line_no);
            if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= nodes.size() || static_cast<std::size_t>(j) >= nodes.size()) {
                throw DecodeError("edge endpoint out of range", line_no);
            }
            if (i == j) throw DecodeError("self-loop", line_no);
            double w = 0.0;
            const auto [ptr, ec] = std::from_chars(wtext.data(), wtext.data() + wtext.size(), w);
            if (ec != std::errc{} || ptr != wtext.data() + wtext.size() || !(w > 0.0) || !std::isfinite(w)) {
                throw DecodeError("edge weight must be a positive number", line_no);
            }
            const auto key = std::make_pair(static_cast<NodeId>(i), static_cast<NodeId>(j));
            const auto mirror = std::make_pair(key.second, key.first);
            if (written.count(key)) throw DecodeError("duplicate edge", line_no);
            if (const auto it = written.find(mirror); it != written.end() && it->second.first != w) {
                throw DecodeError("asymmetric weights for edge " + std::to_string(i) + "-" + std::to_string(j) +
                                      " (see line " + std::to_string(it->second.second) + ")",
                                  line_no);
            }
            written[key] = {w, line_no};
        } else {
            throw DecodeError("unrecognised line", line_no);
        }
    }
    if (nodes.size() != n) throw DecodeError("header declares " + std::to_string(n) + " nodes, found " + std::to_string(nodes.size()), line_no);

    std::vector<WeightedEdge> edges;
    for (const auto& [key, value] : written) {
        if (key.first > key.second && written.count({key.second, key.first})) continue;
        edges.push_back(WeightedEdge{std::min(key.first, key.second), std::max(key.first, key.second), value.first});
    }
    if (edges.size() != m) throw DecodeError("header declares " + std::to_string(m) + " edges, found " + std::to_string(edges.size()), line_no);
    return CoauthGraph(std::move(nodes), std::move(edges));
}

CoauthGraph decode_graph(std::string_view text) {
    std::istringstream in{std::string(text)};
    return decode_graph(in);
}

void save_graph(const std::string& path, const CoauthGraph& graph) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    encode_graph(out, graph);
}

CoauthGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return decode_graph(in);
}

} // namespace peerreview
