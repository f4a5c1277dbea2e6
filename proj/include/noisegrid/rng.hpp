#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace noisegrid {

// FNV-1a 64-bit. Used for RNG stream derivation, payload digests and the
// lattice state digest.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Named, splittable RNG stream. Each (scenario seed, label) pair yields an
// independent mt19937_64 sequence, so adding one stream never perturbs
// another. All variate transforms are hand-rolled on top of the engine's
// standardized output: std::*_distribution results vary across standard
// library implementations and would break the byte-identical determinism
// contract.
class RngStream {
public:
    RngStream(uint64_t seed, std::string_view label)
        : engine_(splitmix64(seed ^ fnv1a64(label))) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Exponential with the given mean; used for Poisson-process gaps.
    double exponential(double mean) {
        double u = uniform01();
        return -mean * std::log1p(-u);
    }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Basic-form Box-Muller: consumes exactly two engine draws per variate,
    // which keeps stream positions independent of the values drawn.
    double gaussian(double sigma) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        return n == 0 ? 0 : engine_() % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace noisegrid
