#pragma once

#include <cstdint>
#include <random>

#include "adavar/linalg.hpp"

namespace adavar {

/// The one generator type used everywhere. All randomness in a run is drawn
/// from generators built by make_rng, never from ambient entropy.
using Rng = std::mt19937_64;

/// Well-known stream ids so that environment draws, noise draws and instance
/// construction never share a generator.
enum class Stream : std::uint64_t {
  kInstance = 1,
  kDecisionSet = 2,
  kNoise = 3,
  kTransition = 4,
  kFalsifierDesign = 5,
  kFalsifierNoise = 6,
};

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// Stateless 64-bit mixer, for per-index draws that must not depend on the
/// order in which they are requested.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Fair coin.
bool coin(Rng& rng);

/// Uniform on the unit sphere in R^d.
Vector random_unit_vector(std::size_t d, Rng& rng);

}  // namespace adavar
