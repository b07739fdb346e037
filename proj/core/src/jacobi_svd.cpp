#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "muonpp/errors.hpp"
#include "muonpp/linalg.hpp"

namespace muonpp::linalg {

Svd jacobi_svd(const Matrix& m) {
  require_finite(m, "jacobi_svd");
  const bool transposed = m.rows() < m.cols();
  Matrix a = transposed ? Matrix(m.transpose()) : m;
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  Matrix v = Matrix::Identity(cols, cols);

  // Rotate column pairs until every pair is orthogonal to working precision.
  const double tol = 2.0 * std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < cols; ++p) {
      for (Eigen::Index q = p + 1; q < cols; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < rows; ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (Eigen::Index i = 0; i < cols; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector norms = a.colwise().norm().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return norms[i] > norms[j]; });

  Matrix u_sorted(rows, cols);
  Matrix v_sorted(cols, cols);
  Vector sigma(cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    sigma[k] = norms[j];
    v_sorted.col(k) = v.col(j);
    if (norms[j] > 0.0) {
      u_sorted.col(k) = a.col(j) / norms[j];
    } else {
      u_sorted.col(k).setZero();
    }
  }

  Svd out;
  out.sigma = std::move(sigma);
  if (transposed) {
    out.u = std::move(v_sorted);
    out.v = std::move(u_sorted);
  } else {
    out.u = std::move(u_sorted);
    out.v = std::move(v_sorted);
  }
  return out;
}

}  // namespace muonpp::linalg
