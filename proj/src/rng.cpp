#include "adavar/rng.hpp"

#include <cmath>

namespace adavar {

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index) {
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool coin(Rng& rng) { return (rng() >> 63) != 0; }

Vector random_unit_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(d));
  double n = 0.0;
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = normal(rng);
    }
    n = v.norm();
  } while (n < 1e-12);
  return v / n;
}

}  // namespace adavar
