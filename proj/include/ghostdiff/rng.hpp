#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace ghostdiff {

/// Counter-based 64-bit generator with a fixed, platform-independent
/// output sequence for a given state.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in (0, 1]; never returns zero so logarithms are safe.
    double uniform01() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Two independent standard normal deviates from one Box-Muller step.
    std::pair<double, double> normal_pair() {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }
};

/// Independent child seed for a (master seed, stream index) pair. Streams
/// with distinct indices produce decorrelated generators, and the mapping
/// is a pure function so any worker can reproduce any frame.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    SplitMix64 g(master ^ (stream * 0xd6e8feb86659fd93ull + 0xa5a5a5a5a5a5a5a5ull));
    g.next();
    return g.next();
}

/// Poisson deviate with the given mean. Exact inversion by multiplication
/// for small means, transformed rejection for large ones.
inline std::uint64_t poisson_sample(SplitMix64& g, double mean) {
    if (!(mean >= 0.0)) return 0;
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = g.uniform01();
        while (p > limit) {
            ++k;
            p *= g.uniform01();
        }
        return k;
    }
    // Hormann's PTRS transformed rejection.
    double b = 0.931 + 2.53 * std::sqrt(mean);
    double a = -0.059 + 0.02483 * b;
    double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = g.uniform01() - 0.5;
        double v = g.uniform01();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = -mean + kf * std::log(mean) - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
}

}  // namespace ghostdiff
