#pragma once

#include <cstdint>

namespace peerreview {

/// SplitMix64. Output is fully specified, so streams are identical on every
/// platform and standard library.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Stream for particle `index` under `seed`: the particle's generator starts
/// from the SplitMix64 finalizer applied to seed ^ (index * golden-gamma), so
/// each particle's walk depends only on (seed, index), never on thread layout.
inline SplitMix64 particle_stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mixer(seed ^ (index * 0x9E3779B97F4A7C15ULL));
    return SplitMix64(mixer.next());
}

} // namespace peerreview
