#pragma once

#include <cstdint>

namespace poledyn {

/// Counter-based pseudorandom stream: word(i) is a pure function of
/// (seed, i), so samples can be drawn in any order -- or from any thread --
/// without changing the stream. splitmix64 finalizer.
struct CounterRng {
    std::uint64_t seed = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t word(std::uint64_t i) const { return mix(seed + 0x9e3779b97f4a7c15ULL * i); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01(std::uint64_t i) const {
        return static_cast<double>(word(i) >> 11) * 0x1.0p-53;
    }

    /// Uniform in [-y, y].
    double symmetric(std::uint64_t i, double y) const { return (2.0 * uniform01(i) - 1.0) * y; }

    /// Uniform in [lo, hi].
    double range(std::uint64_t i, double lo, double hi) const {
        return lo + uniform01(i) * (hi - lo);
    }

    /// Independent stream for a sub-experiment (one per cell, level, ...).
    CounterRng derive(std::uint64_t tag) const { return CounterRng{mix(seed ^ mix(tag))}; }
};

} // namespace poledyn
