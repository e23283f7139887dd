#pragma once

#include <cmath>
#include <cstdint>

namespace screc {

/// SplitMix64: the 64-bit mixing generator of Steele, Lea and Flood.
/// Chosen because its full state transition fits in three lines, so any
/// other implementation (tests, other languages) can reproduce the exact
/// stream from the same seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1], safe as a log() argument.
    double next_unit_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::uint64_t state_;
};

/// Standard normal deviates via Box-Muller on a SplitMix64 stream.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.next_unit_open();
        const double u2 = rng_.next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    SplitMix64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Decorrelated child seeds for one master seed. Consecutive master seeds
/// map to unrelated children, so sweeps may use base_seed + k safely.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
    SplitMix64 mix(master);
    std::uint64_t s = 0;
    for (std::uint64_t i = 0; i <= stream_id; ++i) s = mix.next_u64();
    return s;
}

}  // namespace screc
