#pragma once

// Counter-based random numbers. Every draw is a pure function of its key, so
// trajectories do not depend on the order in which draws are requested.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cim {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of sweep cell `index` derived from the run's base seed.
constexpr std::uint64_t cell_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return mix64(base_seed ^ mix64(index));
}

/// Uniform double in (0, 1) from 53 random bits; never returns 0.
constexpr double to_unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Keyed standard-normal stream. A draw is identified by
/// (seed, round, pair index, quadrature tag).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    double draw(std::uint64_t round, std::uint64_t pair, std::uint64_t tag) const noexcept {
        std::uint64_t key = mix64(seed_);
        key = mix64(key ^ round);
        key = mix64(key ^ (pair << 2 | (tag & 3)));
        const double u1 = to_unit_open(mix64(key));
        const double u2 = to_unit_open(mix64(key ^ 0xD1B54A32D192ED03ULL));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t seed_;
};

}  // namespace cim
