#pragma once

#include <cmath>
#include <cstdint>

#include "vflow/fail.hpp"

// Deterministic RNG used by the generators and placebo loops. The engine is
// splitmix64 with explicit stream derivation, and every distribution transform
// is written out here: std::* distributions are implementation-defined, and
// the generators promise byte-identical output for a given seed on any
// platform. Parallel loops derive one stream per work item from
// (seed, item index) so thread count never changes the draws.

namespace vflow {

struct Rng {
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased-enough bounded draw (multiply-shift); bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        require(bound > 0, "rng: bound must be positive");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe to pass to log().
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::int64_t int_range(std::int64_t lo, std::int64_t hi) {  // inclusive ends
        require(hi >= lo, "rng: empty integer range");
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    // Standard normal via Box-Muller (one value per call; second discarded to
    // keep call sites stream-stable).
    double normal() {
        const double u = uniform_pos();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
    }

    // Poisson draw: Knuth multiplication below 30, normal approximation with
    // continuity correction above (means in this codebase stay modest, the
    // approximation branch exists for safety, not accuracy-critical paths).
    std::int64_t poisson(double mean) {
        require(mean >= 0, "rng: poisson mean must be non-negative");
        if (mean == 0) return 0;
        if (mean < 30.0) {
            const double limit = std::exp(-mean);
            double prod = 1.0;
            std::int64_t k = -1;
            do {
                ++k;
                prod *= uniform_pos();
            } while (prod > limit);
            return k;
        }
        const double draw = mean + std::sqrt(mean) * normal();
        return draw < 0 ? 0 : static_cast<std::int64_t>(std::llround(draw));
    }
};

// Stream derivation: stable child seed for (seed, tag) pairs.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) {
    Rng r(seed ^ (0x517cc1b727220a95ULL * (tag + 1)));
    r.next();
    return r.next();
}

}  // namespace vflow
