#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace choreo {

// All randomness in the project flows through these helpers so that runs
// are reproducible independent of the standard library's distribution
// implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  // 53 random mantissa bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, one draw per call (the sibling value is discarded).
inline double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace choreo
