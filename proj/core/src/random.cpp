#include "stochhom/random.hpp"

namespace stochhom {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point, std::uint64_t sample) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ point) ^ sample);
}

}  // namespace stochhom
