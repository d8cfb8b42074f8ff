#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "peerreview/corpus.hpp"

namespace peerreview {

using NodeId = std::uint32_t;

struct WeightedEdge {
    NodeId a;  // a < b
    NodeId b;
    double weight;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Undirected weighted co-authorship graph. Nodes are canonical author names
/// kept in lexicographic order, so a NodeId is also a rank in that order.
/// Invariants (checked on construction): no self-loops, weights > 0 and
/// finite, at most one edge per unordered pair.
class CoauthGraph {
public:
    CoauthGraph() = default;
    CoauthGraph(std::vector<std::string> nodes, std::vector<WeightedEdge> edges, std::size_t paper_count = 0);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t paper_count() const { return paper_count_; }

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<WeightedEdge>& edges() const { return edges_; }
    const std::string& name(NodeId id) const { return nodes_.at(id); }
    std::optional<NodeId> find(std::string_view canonical) const;

    /// w_ij, 0 when there is no edge. Symmetric by construction.
    double weight(std::string_view a, std::string_view b) const;

    /// (neighbor, raw weight) sorted by neighbor id.
    std::span<const std::pair<NodeId, double>> neighbors(NodeId id) const { return adjacency_.at(id); }

    // Structural equality; paper_count is bookkeeping and not part of the file format.
    friend bool operator==(const CoauthGraph& x, const CoauthGraph& y) {
        return x.nodes_ == y.nodes_ && x.edges_ == y.edges_;
    }

private:
    std::vector<std::string> nodes_;
    std::vector<WeightedEdge> edges_;
    std::vector<std::vector<std::pair<NodeId, double>>> adjacency_;
    std::size_t paper_count_ = 0;
};

/// Row-stochastic directed view: each non-isolated node's outgoing
/// probabilities sum to 1.
class StochasticGraph {
public:
    struct Transition {
        NodeId target;
        double probability;
    };

    StochasticGraph() = default;
    StochasticGraph(std::vector<std::string> nodes, std::vector<std::vector<Transition>> out_edges);

    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::string& name(NodeId id) const { return nodes_.at(id); }
    std::optional<NodeId> find(std::string_view canonical) const;
    std::span<const Transition> out_edges(NodeId id) const { return out_.at(id); }

    // Cumulative probabilities aligned with out_edges(id), last entry exactly 1.
    std::span<const double> cumulative(NodeId id) const { return cumulative_.at(id); }

private:
    std::vector<std::string> nodes_;
    std::vector<std::vector<Transition>> out_;
    std::vector<std::vector<double>> cumulative_;
};

/// Tie strength contributed by one paper to each of its author pairs:
/// 1/(x-1) for x >= 2, 0 for a single-author paper. Throws ValidationError
/// for x <= 0.
double paper_tie_strength(long long author_count);

/// Accumulates papers into pair weights. Contributions are tallied per pair
/// and per author count, then summed in ascending author-count order, so the
/// result is bit-identical for any insertion order.
class GraphBuilder {
public:
    void add_paper(const std::vector<AuthorKey>& authors);
    void add_paper(const PaperRecord& record) { add_paper(record.authors); }
    CoauthGraph build() const;

private:
    std::map<std::string, std::size_t> nodes_;
    std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::uint64_t>> tallies_;
    std::size_t papers_ = 0;
};

CoauthGraph build_graph(const std::vector<PaperRecord>& corpus);

/// w / sum(w), summed in the given order. Empty input gives empty output.
std::vector<double> normalize_weights(std::span<const double> weights);

StochasticGraph normalize_out_edges(const CoauthGraph& graph);

// Text codec:
//   coauth-graph v1 nodes=<n> edges=<m>
//   N <canonical>           (n lines, lexicographic order)
//   E <i> <j> <w>           (m lines, node indices, i < j, %.12g weights)
void encode_graph(std::ostream& out, const CoauthGraph& graph);
std::string encode_graph(const CoauthGraph& graph);
/// Throws DecodeError with the offending line number.
CoauthGraph decode_graph(std::istream& in);
CoauthGraph decode_graph(std::string_view text);

void save_graph(const std::string& path, const CoauthGraph& graph);
CoauthGraph load_graph(const std::string& path);

} // namespace peerreview
