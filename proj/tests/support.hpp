#pragma once

#include <cmath>
#include <random>

#include "sgno/spectral.hpp"
#include "sgno/types.hpp"

namespace sgno::testing {

inline RowMatrix random_field(Eigen::Index channels, Eigen::Index points, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix m(channels, points);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline double rel_error(const RowMatrix& a, const RowMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// cos(2 pi k x) sampled on an n-point 1D grid.
inline RowMatrix cosine_mode(int n, int k, double phase = 0.0) {
  RowMatrix u(1, n);
  for (int i = 0; i < n; ++i) u(0, i) = std::cos(2.0 * M_PI * k * i / n + phase);
  return u;
}

}  // namespace sgno::testing
