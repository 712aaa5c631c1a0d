#pragma once

/// @file rng.hpp
/// @brief Deterministic random stream with portable distributions.
///
/// The standard library fixes the output sequence of std::mt19937_64 but not of
/// its distributions, so every draw used by the algorithms is derived here from
/// raw 64-bit engine outputs with integer arithmetic only.

#include <cstdint>
#include <limits>
#include <random>

namespace ollga {

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), bound > 0, by rejection (no modulo bias).
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

    /// One coin with success probability p; always consumes exactly one draw.
    bool bernoulli(double p) { return uniform01() < p; }

    /// Bin(n, p) as n sequential coins; no draws when p is 0 or 1.
    std::uint64_t binomial(std::uint64_t n, double p) {
        if (p <= 0.0) {
            return 0;
        }
        if (p >= 1.0) {
            return n;
        }
        std::uint64_t successes = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            successes += bernoulli(p) ? 1U : 0U;
        }
        return successes;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace ollga
