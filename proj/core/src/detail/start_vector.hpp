#pragma once

#include <cmath>

#include "muonpp/linalg.hpp"

namespace muonpp::linalg::detail {

// Normalized all-ones vector with a fixed aperiodic perturbation so the start is
// never exactly orthogonal to a symmetric singular vector.
inline Vector default_start(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.25 * std::sin(1.0 + 1.37 * static_cast<double>(i));
  }
  return v.normalized();
}

// Second deterministic start, linearly independent of default_start for n >= 2.
inline Vector alternate_start(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = std::cos(2.0 + 2.71 * static_cast<double>(i)) + (i % 2 == 0 ? 0.5 : -0.5);
  }
  return v.normalized();
}

}  // namespace muonpp::linalg::detail
