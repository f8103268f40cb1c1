#pragma once

#include <cstdint>
#include <random>

namespace eafl {

using Rng = std::mt19937_64;

/// Independent random streams carved out of one root seed.
enum class RngPurpose : std::uint32_t {
    Fleet = 1,
    Data = 2,
    Selection = 3,
    Training = 4,
    Background = 5,
};

/// Generator for (root seed, round, purpose, sub-key). std::seed_seq is fully specified by the
/// standard, so streams are reproducible across library implementations.
[[nodiscard]] inline Rng make_rng(std::uint64_t root, std::uint64_t round, RngPurpose purpose,
                                  std::uint64_t sub = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                      static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(round >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(sub),
                      static_cast<std::uint32_t>(sub >> 32)};
    return Rng(seq);
}

/// Uniform double in [0,1) built from the top 53 bits of one draw.
[[nodiscard]] inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; n > 0.
[[nodiscard]] inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % n;
}

} // namespace eafl
