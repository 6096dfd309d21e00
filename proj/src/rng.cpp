#include "blockspec/rng.hpp"

#include <cmath>

namespace blockspec {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

std::vector<double> rademacher_unit(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& x : v) x = (rng() >> 63) ? s : -s;
  return v;
}

}  // namespace blockspec
