#pragma once

// Every stochastic operation takes an explicit 64-bit seed. Independent
// streams come from derive_seed.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cellcov {

using Engine = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Pure function of (base, tags...): folds each tag into the state with mix64.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept;

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

// Stream tags used by the generators.
namespace stream {
inline constexpr std::uint64_t covariance = 0x636f76;  // "cov"
inline constexpr std::uint64_t samples = 0x736d70;     // "smp"
inline constexpr std::uint64_t mask = 0x6d736b;        // "msk"
inline constexpr std::uint64_t contamination = 0x636e74;
}  // namespace stream

}  // namespace cellcov
