#pragma once

#include <cstdint>
#include <random>

namespace stochhom {

/// The random stream every stochastic operation draws from. A generation run
/// owns its stream exclusively.
using RandomStream = std::mt19937_64;

/// SplitMix64 finalizer. Stable across platforms; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Per-sample seed of a campaign:
///   splitmix64(splitmix64(splitmix64(master) ^ point) ^ sample)
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point, std::uint64_t sample) noexcept;

/// Uniform double in [0, 1) from the top 53 bits of one draw. Unlike
/// std::uniform_real_distribution the result is identical on every platform.
[[nodiscard]] inline double uniform01(RandomStream& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

[[nodiscard]] inline double uniform(RandomStream& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace stochhom
