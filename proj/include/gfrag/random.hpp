#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace gfrag {

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable, order-sensitive hash of a seed and a sequence of words. Used to
/// derive independent streams (per cell label, per replica, per purpose)
/// without any shared generator state.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::span<const std::uint64_t> words) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ULL);
    for (std::uint64_t w : words) h = mix64(h ^ mix64(w + 0x3c6ef372fe94f82bULL));
    return mix64(h ^ words.size());
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept {
    return derive_seed(seed, std::span<const std::uint64_t>(words.begin(), words.size()));
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

// Purpose tags for derive_seed, kept distinct so streams never collide.
namespace stream {
inline constexpr std::uint64_t gaussian = 1;
inline constexpr std::uint64_t jumps = 2;
inline constexpr std::uint64_t cell = 3;
inline constexpr std::uint64_t replica = 4;
inline constexpr std::uint64_t residual = 5;
inline constexpr std::uint64_t tag = 6;
inline constexpr std::uint64_t spine = 7;
inline constexpr std::uint64_t bank = 8;
inline constexpr std::uint64_t aux = 9;
}  // namespace stream

}  // namespace gfrag
