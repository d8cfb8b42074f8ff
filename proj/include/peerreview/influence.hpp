#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "peerreview/coauthorship_graph.hpp"
#include "peerreview/corpus.hpp"

namespace peerreview {

enum class DiffusionMode {
    monte_carlo,  // stochastic particle walks
    expected,     // exact expectation of the walks (deterministic)
};

struct DiffusionConfig {
    std::uint32_t particles_per_mention = 10;
    double initial_energy = 1.0;
    double decay = 0.5;           // fraction of energy lost per hop, in (0, 1]
    double energy_floor = 1e-4;   // particles retire below this magnitude
    std::uint64_t rng_seed = 0x5eed;
    bool author_penalty_enabled = false;
    double author_penalty_energy = -1.0;  // in [-1, 0]
    DiffusionMode mode = DiffusionMode::monte_carlo;
    unsigned threads = 1;  // 0 = hardware concurrency; results do not depend on it

    /// Throws ValidationError if any field is out of range.
    void validate() const;
};

struct ParticleGroup {
    std::uint64_t count = 0;
    double energy = 0.0;
};

/// Particles placed on each author before diffusion. Groups keep positive and
/// penalty particles apart so the walk can realise both.
class SeedVector {
public:
    void add(const std::string& author, std::uint64_t count, double energy);

    /// Sum of count * energy over the author's groups.
    double mass(std::string_view author) const;
    double total_mass() const;
    std::uint64_t particle_count() const;
    bool empty() const { return groups_.empty(); }

    SeedVector scaled(double factor) const;

    const std::map<std::string, std::vector<ParticleGroup>, std::less<>>& groups() const { return groups_; }

private:
    std::map<std::string, std::vector<ParticleGroup>, std::less<>> groups_;
};

/// Accumulated node energy per author (sparse: untouched authors are absent).
using EnergyVector = std::map<std::string, double, std::less<>>;

struct InfluenceEntry {
    std::string author;
    double influence = 0.0;

    friend bool operator==(const InfluenceEntry&, const InfluenceEntry&) = default;
};

/// Influence per author, ordered by descending influence then author name.
class InfluenceMap {
public:
    InfluenceMap() = default;
    explicit InfluenceMap(std::vector<InfluenceEntry> entries);

    const std::vector<InfluenceEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::optional<double> influence_of(std::string_view author) const;
    double total() const;

    /// Drops the given authors and zero entries, then rescales to sum 1.
    InfluenceMap excluding(const std::set<std::string, std::less<>>& authors) const;

    friend bool operator==(const InfluenceMap&, const InfluenceMap&) = default;

private:
    std::vector<InfluenceEntry> entries_;
};

struct SeedResult {
    SeedVector seed;
    std::vector<std::string> unmatched;  // referenced authors not in the graph
};

/// Every mention of an author in `references` places particles_per_mention
/// particles of initial_energy on that author's node. With the penalty on,
/// each manuscript author in the graph also gets particles_per_mention
/// particles of author_penalty_energy.
SeedResult seed_particles(const StochasticGraph& graph, const std::vector<CitedWork>& references,
                          const std::vector<AuthorKey>& manuscript_authors, const DiffusionConfig& cfg);

/// Stochastic particle flow. Each particle deposits its energy at its seed
/// node, then repeatedly hops along a sampled out-edge, deposits its current
/// energy at the destination and loses `decay` of it. Particles retire below
/// energy_floor or on a node without out-edges. Bit-identical for identical
/// inputs regardless of cfg.threads.
EnergyVector run_diffusion(const StochasticGraph& graph, const SeedVector& seed, const DiffusionConfig& cfg);

/// Expected deposits of run_diffusion without the energy floor:
/// d = s + P^T (I - (1-decay) P^T)^{-1} s, by mass propagation until the
/// undeposited mass falls below 1e-12 (relative to the seed's L1 norm, floor 1).
EnergyVector expected_influence(const StochasticGraph& graph, const SeedVector& seed, double decay);

/// Clamps negative energies to zero and divides by the total. A zero total
/// gives an empty map.
InfluenceMap normalize_influence(const EnergyVector& energy);

struct Ranking {
    InfluenceMap referees;
    std::vector<std::string> unmatched;
};

/// seed -> diffuse (per cfg.mode) -> normalize, then removes the record's own
/// authors and renormalizes.
Ranking rank_referees(const StochasticGraph& graph, const PaperRecord& record, const DiffusionConfig& cfg);

/// "<canonical> <influence>" lines with five decimals; top_k == 0 prints all.
std::string format_influence_report(const InfluenceMap& influence, std::size_t top_k = 0);

} // namespace peerreview
