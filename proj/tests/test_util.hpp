#pragma once

#include "kfosu/types.hpp"

#include <cstdint>
#include <random>

namespace kfosu::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return random_matrix(n, 1, rng, lo, hi).col(0);
}

// Uniform draw from the unit simplex.
inline Vector random_simplex(Eigen::Index k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector c(k);
  for (Eigen::Index i = 0; i < k; ++i) c(i) = e(rng);
  return c / c.sum();
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.norm());
  return (a - b).norm() / scale;
}

}  // namespace kfosu::testing
