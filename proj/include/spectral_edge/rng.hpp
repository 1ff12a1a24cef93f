#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spectral_edge {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// seed = hash(root, k1, k2, ...). Stable across runs, platforms and worker
// counts, so replicate k always sees the same stream.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace spectral_edge
