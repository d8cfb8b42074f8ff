#include "peerreview/influence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "peerreview/errors.hpp"
#include "peerreview/rng.hpp"

namespace peerreview {

namespace {

constexpr std::uint64_t kParticlesPerBlock = 4096;
constexpr std::size_t kMaxPropagationRounds = 1'000'000;

struct SeedGroup {
    NodeId node;
    std::uint64_t first_particle;  // global index of the group's first particle
    std::uint64_t count;
    double energy;
};

std::vector<SeedGroup> resolve_seed(const StochasticGraph& graph, const SeedVector& seed) {
    std::vector<SeedGroup> out;
    std::uint64_t next = 0;
    for (const auto& [author, groups] : seed.groups()) {
        const auto id = graph.find(author);
        if (!id) throw ValidationError("seed mass on author not in graph: " + author);
        for (const auto& g : groups) {
            out.push_back(SeedGroup{*id, next, g.count, g.energy});
            next += g.count;
        }
    }
    return out;
}

// Deposits from one block of particles, as (node, energy) sorted by node.
using BlockDeposits = std::vector<std::pair<NodeId, double>>;

class BlockWalker {
public:
    BlockWalker(const StochasticGraph& graph, const std::vector<SeedGroup>& groups, const DiffusionConfig& cfg)
        : graph_(graph), groups_(groups), cfg_(cfg), scratch_(graph.node_count(), 0.0),
          touched_flag_(graph.node_count(), 0) {}

    BlockDeposits walk_block(std::uint64_t begin, std::uint64_t end) {
        auto group = std::upper_bound(groups_.begin(), groups_.end(), begin,
                                      [](std::uint64_t k, const SeedGroup& g) { return k < g.first_particle; });
        --group;
        for (std::uint64_t k = begin; k < end; ++k) {
            while (k >= group->first_particle + group->count) ++group;
            walk_particle(k, group->node, group->energy);
        }

        std::sort(touched_.begin(), touched_.end());
        BlockDeposits out;
        out.reserve(touched_.size());
        for (NodeId n : touched_) {
            out.emplace_back(n, scratch_[n]);
            scratch_[n] = 0.0;
            touched_flag_[n] = 0;
        }
        touched_.clear();
        return out;
    }

private:
    void deposit(NodeId n, double e) {
        if (!touched_flag_[n]) {
            touched_flag_[n] = 1;
            touched_.push_back(n);
        }
        scratch_[n] += e;
    }

    void walk_particle(std::uint64_t index, NodeId at, double energy) {
        auto rng = particle_stream(cfg_.rng_seed, index);
        const double keep = 1.0 - cfg_.decay;
        deposit(at, energy);
        while (std::abs(energy) >= cfg_.energy_floor) {
            const auto cum = graph_.cumulative(at);
            if (cum.empty()) break;
            const double u = rng.uniform();
            auto pick = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            if (pick >= cum.size()) pick = cum.size() - 1;
            at = graph_.out_edges(at)[pick].target;
            deposit(at, energy);
            energy *= keep;
        }
    }

    const StochasticGraph& graph_;
    const std::vector<SeedGroup>& groups_;
    const DiffusionConfig& cfg_;
    std::vector<double> scratch_;
    std::vector<char> touched_flag_;
    std::vector<NodeId> touched_;
};

} // namespace

void DiffusionConfig::validate() const {
    if (particles_per_mention < 1) throw ValidationError("particles_per_mention must be >= 1");
    if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("decay must be in (0, 1]");
    if (!(energy_floor > 0.0)) throw ValidationError("energy_floor must be > 0");
    if (!std::isfinite(initial_energy)) throw ValidationError("initial_energy must be finite");
    if (!(author_penalty_energy >= -1.0 && author_penalty_energy <= 0.0)) {
        throw ValidationError("author_penalty_energy must be in [-1, 0]");
    }
}

void SeedVector::add(const std::string& author, std::uint64_t count, double energy) {
    if (count == 0) return;
    auto& groups = groups_[author];
    for (auto& g : groups) {
        if (g.energy == energy) {
            g.count += count;
            return;
        }
    }
    groups.push_back(ParticleGroup{count, energy});
}

double SeedVector::mass(std::string_view author) const {
    const auto it = groups_.find(author);
    if (it == groups_.end()) return 0.0;
    double m = 0.0;
    for (const auto& g : it->second) m += static_cast<double>(g.count) * g.energy;
    return m;
}

double SeedVector::total_mass() const {
    double m = 0.0;
    for (const auto& [author, _] : groups_) m += mass(author);
    return m;
}

std::uint64_t SeedVector::particle_count() const {
    std::uint64_t n = 0;
    for (const auto& [_, groups] : groups_) {
        for (const auto& g : groups) n += g.count;
    }
    return n;
}

SeedVector SeedVector::scaled(double factor) const {
    SeedVector out;
    for (const auto& [author, groups] : groups_) {
        for (const auto& g : groups) out.add(author, g.count, g.energy * factor);
    }
    return out;
}

InfluenceMap::InfluenceMap(std::vector<InfluenceEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const InfluenceEntry& a, const InfluenceEntry& b) {
        if (a.influence != b.influence) return a.influence > b.influence;
        return a.author < b.author;
    });
}

std::optional<double> InfluenceMap::influence_of(std::string_view author) const {
    for (const auto& e : entries_) {
        if (e.author == author) return e.influence;
    }
    return std::nullopt;
}

double InfluenceMap::total() const {
    double t = 0.0;
    for (const auto& e : entries_) t += e.influence;
    return t;
}

InfluenceMap InfluenceMap::excluding(const std::set<std::string, std::less<>>& authors) const {
    EnergyVector kept;
    for (const auto& e : entries_) {
        if (e.influence > 0.0 && !authors.count(e.author)) kept[e.author] = e.influence;
    }
    return normalize_influence(kept);
}

SeedResult seed_particles(const StochasticGraph& graph, const std::vector<CitedWork>& references,
                          const std::vector<AuthorKey>& manuscript_authors, const DiffusionConfig& cfg) {
    cfg.validate();
    SeedResult result;
    std::set<std::string> unmatched;
    for (const auto& ref : references) {
        for (const auto& author : ref.authors) {
            if (graph.find(author.canonical)) {
                result.seed.add(author.canonical, cfg.particles_per_mention, cfg.initial_energy);
            } else {
                unmatched.insert(author.canonical);
            }
        }
    }
    if (cfg.author_penalty_enabled) {
        std::set<std::string> penalized;
        for (const auto& author : manuscript_authors) {
            if (graph.find(author.canonical) && penalized.insert(author.canonical).second) {
                result.seed.add(author.canonical, cfg.particles_per_mention, cfg.author_penalty_energy);
            }
        }
    }
    result.unmatched.assign(unmatched.begin(), unmatched.end());
    return result;
}

EnergyVector run_diffusion(const StochasticGraph& graph, const SeedVector& seed, const DiffusionConfig& cfg) {
    cfg.validate();
    const auto groups = resolve_seed(graph, seed);
    const std::uint64_t total = seed.particle_count();
    if (total == 0) return {};

    const std::uint64_t blocks = (total + kParticlesPerBlock - 1) / kParticlesPerBlock;
    std::vector<BlockDeposits> per_block(blocks);

    unsigned workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));

    std::atomic<std::uint64_t> next_block{0};
    auto work = [&] {
        BlockWalker walker(graph, groups, cfg);
        for (auto b = next_block.fetch_add(1); b < blocks; b = next_block.fetch_add(1)) {
            const auto begin = b * kParticlesPerBlock;
            per_block[b] = walker.walk_block(begin, std::min(total, begin + kParticlesPerBlock));
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    }

    // Block-ordered reduction keeps the floating-point sums independent of
    // how blocks were scheduled.
    std::vector<double> energy(graph.node_count(), 0.0);
    std::vector<char> touched(graph.node_count(), 0);
    for (const auto& block : per_block) {
        for (const auto& [node, e] : block) {
            energy[node] += e;
            touched[node] = 1;
        }
    }
    EnergyVector out;
    for (NodeId n = 0; n < graph.node_count(); ++n) {
        if (touched[n]) out.emplace(graph.name(n), energy[n]);
    }
    return out;
}

EnergyVector expected_influence(const StochasticGraph& graph, const SeedVector& seed, double decay) {
    if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("decay must be in (0, 1]");
    const auto n = graph.node_count();
    std::vector<double> current(n, 0.0);
    double seed_norm = 0.0;
    for (const auto& [author, _] : seed.groups()) {
        const auto id = graph.find(author);
        if (!id) throw ValidationError("seed mass on author not in graph: " + author);
        current[*id] = seed.mass(author);
        seed_norm += std::abs(current[*id]);
    }

    std::vector<double> deposited = current;
    std::vector<double> arriving(n, 0.0);
    const double keep = 1.0 - decay;
    const double tolerance = 1e-12 * std::max(1.0, seed_norm);

    double residual = seed_norm;
    std::size_t rounds = 0;
    while (residual >= tolerance) {
        if (++rounds > kMaxPropagationRounds) throw InternalError("expected_influence did not converge");
        std::fill(arriving.begin(), arriving.end(), 0.0);
        for (NodeId i = 0; i < n; ++i) {
            if (current[i] == 0.0) continue;
            // Mass on a node without out-edges is absorbed.
            for (const auto& t : graph.out_edges(i)) arriving[t.target] += t.probability * current[i];
        }
        residual = 0.0;
        for (NodeId i = 0; i < n; ++i) {
            deposited[i] += arriving[i];
            current[i] = arriving[i] * keep;
            residual += std::abs(current[i]);
        }
    }

    EnergyVector out;
    for (NodeId i = 0; i < n; ++i) {
        if (deposited[i] != 0.0) out.emplace(graph.name(i), deposited[i]);
    }
    return out;
}

InfluenceMap normalize_influence(const EnergyVector& energy) {
    double total = 0.0;
    for (const auto& [_, e] : energy) total += std::max(0.0, e);
    if (!(total > 0.0)) return {};
    std::vector<InfluenceEntry> entries;
    entries.reserve(energy.size());
    for (const auto& [author, e] : energy) entries.push_back({author, std::max(0.0, e) / total});
    return InfluenceMap(std::move(entries));
}

Ranking rank_referees(const StochasticGraph& graph, const PaperRecord& record, const DiffusionConfig& cfg) {
    auto seeded = seed_particles(graph, record.references, record.authors, cfg);
    Ranking ranking;
    ranking.unmatched = std::move(seeded.unmatched);
    if (seeded.seed.empty()) return ranking;

    const auto energy = cfg.mode == DiffusionMode::expected ? expected_influence(graph, seeded.seed, cfg.decay)
                                                            : run_diffusion(graph, seeded.seed, cfg);
    std::set<std::string, std::less<>> own;
    for (const auto& a : record.authors) own.insert(a.canonical);
    ranking.referees = normalize_influence(energy).excluding(own);
    return ranking;
}

std::string format_influence_report(const InfluenceMap& influence, std::size_t top_k) {
    std::string out;
    std::size_t printed = 0;
    for (const auto& e : influence.entries()) {
        if (top_k != 0 && printed == top_k) break;
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.5f\n", e.influence);
        out += e.author;
        out += buf;
        ++printed;
    }
    return out;
}

} // namespace peerreview
