#pragma once

// Seed derivation. A run never shares a generator across tasks: each task owns
// a stream keyed by (seed, index), so results do not depend on how tasks are
// scheduled.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace blockspec {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` under `seed`. Nested keys compose:
/// derive_seed(derive_seed(s, a), b).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t index) { return Rng(derive_seed(seed, index)); }

std::vector<double> gaussian_vector(Rng& rng, std::size_t n);

/// Rademacher (+1/-1) entries scaled to unit Euclidean norm.
std::vector<double> rademacher_unit(Rng& rng, std::size_t n);

}  // namespace blockspec
