#pragma once

#include <cstdint>
#include <random>

namespace selfplay {

using Rng = std::mt19937_64;

// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform in [lo, hi]; consumes exactly one draw even when lo == hi.
inline double uniform_in(Rng& rng, double lo, double hi) {
  const double u = std::generate_canonical<double, 53>(rng);
  return lo + (hi - lo) * u;
}

}  // namespace selfplay
