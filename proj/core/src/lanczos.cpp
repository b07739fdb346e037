#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

#include "detail/start_vector.hpp"
#include "muonpp/errors.hpp"
#include "muonpp/linalg.hpp"

namespace muonpp::linalg {

namespace {

// Two passes of classical Gram-Schmidt against the first `k` columns of `basis`.
void reorthogonalize(Vector& x, const Matrix& basis, Eigen::Index k) {
  if (k == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector coeff = basis.leftCols(k).transpose() * x;
    x.noalias() -= basis.leftCols(k) * coeff;
  }
}

struct RitzCheck {
  std::vector<double> sigma;
  double residual = 0.0;  // max relative residual over the leading `want` values
};

// Ritz values of the upper bidiagonal B (diag alpha, superdiag beta) from the
// tridiagonal B^T B. The residual of Ritz pair i is beta_last * |y_i(last)| with
// y_i = B x_i / s_i, whose last entry is alpha_last * x_i(last) / s_i.
RitzCheck ritz(const std::vector<double>& alpha, const std::vector<double>& beta, int want) {
  const auto k = static_cast<Eigen::Index>(alpha.size());
  Vector diag(k);
  Vector sub(std::max<Eigen::Index>(k - 1, 0));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double prev = i > 0 ? beta[static_cast<std::size_t>(i - 1)] : 0.0;
    diag[i] = alpha[static_cast<std::size_t>(i)] * alpha[static_cast<std::size_t>(i)] + prev * prev;
    if (i + 1 < k) sub[i] = alpha[static_cast<std::size_t>(i)] * beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const Vector& lambda = solver.eigenvalues();  // ascending
  const Matrix& x = solver.eigenvectors();

  RitzCheck out;
  const double beta_last = beta[static_cast<std::size_t>(k - 1)];
  const double alpha_last = alpha[static_cast<std::size_t>(k - 1)];
  const double s1 = std::sqrt(std::max(lambda[k - 1], 0.0));
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    out.sigma.push_back(std::sqrt(std::max(lambda[i], 0.0)));
  }
  for (int i = 0; i < want && i < k; ++i) {
    const Eigen::Index col = k - 1 - i;
    const double s = out.sigma[static_cast<std::size_t>(i)];
    double r = 0.0;
    if (s > 0.0) r = beta_last * alpha_last * std::abs(x(k - 1, col)) / s;
    out.residual = std::max(out.residual, s1 > 0.0 ? r / s1 : 0.0);
  }
  return out;
}

// Singular values of the k x (k + 1) upper bidiagonal [B | beta_k e_k], from the
// tridiagonal B B^T + beta_k^2 e_k e_k^T. Exact when alpha_{k+1} vanished, since
// then M V_{k+1} = U_k [B | beta_k e_k] spans an invariant pair of subspaces.
std::vector<double> wide_ritz(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const auto k = static_cast<Eigen::Index>(alpha.size());
  Vector diag(k);
  Vector sub(std::max<Eigen::Index>(k - 1, 0));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double a = alpha[static_cast<std::size_t>(i)];
    const double b = beta[static_cast<std::size_t>(i)];
    diag[i] = a * a + b * b;
    if (i + 1 < k) sub[i] = alpha[static_cast<std::size_t>(i + 1)] * b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index i = k - 1; i >= 0; --i) out.push_back(std::sqrt(std::max(solver.eigenvalues()[i], 0.0)));
  return out;
}

}  // namespace

LanczosResult top_singular_values(const Matrix& m, int k, double tol, int max_iter) {
  require_finite(m, "top_singular_values");
  if (k <= 0) throw InvalidInput("top_singular_values: k must be positive");
  if (!(tol > 0.0)) throw InvalidInput("top_singular_values: tol must be positive");
  const Eigen::Index full = std::min(m.rows(), m.cols());
  const int want = static_cast<int>(std::min<Eigen::Index>(k, full));
  const int limit = static_cast<int>(max_iter <= 0 ? full : std::min<Eigen::Index>(max_iter, full));

  LanczosResult out;
  const double fro = m.norm();
  if (fro == 0.0) {
    out.sigma.assign(static_cast<std::size_t>(want), 0.0);
    out.converged = true;
    return out;
  }

  Vector v = detail::default_start(m.cols());
  if ((m * v).norm() <= 1e-14 * fro) {
    Eigen::Index j = 0;
    m.colwise().norm().maxCoeff(&j);
    v = Vector::Unit(m.cols(), j);
  }

  Matrix vb(m.cols(), limit + 1);
  Matrix ub(m.rows(), limit);
  vb.col(0) = v;
  std::vector<double> alpha;
  std::vector<double> beta;
  const double breakdown = 1e-14 * fro;
  int next_check = std::max(want + 2, 8);

  for (int j = 0; j < limit; ++j) {
    Vector u = m * vb.col(j);
    if (j > 0) u -= beta.back() * ub.col(j - 1);
    reorthogonalize(u, ub, j);
    const double a = u.norm();
    if (a <= breakdown) {
      if (alpha.empty()) break;
      // Invariant subspace found; the Ritz values so far are exact for it.
      out.converged = true;
      break;
    }
    ub.col(j) = u / a;
    alpha.push_back(a);

    Vector w = m.transpose() * ub.col(j) - a * vb.col(j);
    reorthogonalize(w, vb, j + 1);
    const double b = w.norm();
    beta.push_back(b);
    const int steps = j + 1;
    out.iterations = steps;

    if (b <= breakdown || steps == limit) {
      const bool exhausted = b <= breakdown || steps == full;
      if (exhausted) {
        // U_k spans the column space (or beta_k ~ 0): [B | beta_k e_k] is exact.
        const std::vector<double> sv = wide_ritz(alpha, beta);
        out.sigma.assign(sv.begin(), sv.begin() + std::min<std::size_t>(want, sv.size()));
        out.converged = true;
        break;
      }
      RitzCheck rc = ritz(alpha, beta, want);
      out.sigma.assign(rc.sigma.begin(), rc.sigma.begin() + std::min<std::size_t>(want, rc.sigma.size()));
      out.residual = rc.residual;
      out.converged = rc.residual <= tol;
      break;
    }
    vb.col(j + 1) = w / b;

    if (steps >= next_check) {
      RitzCheck rc = ritz(alpha, beta, want);
      if (rc.residual <= tol) {
        out.sigma.assign(rc.sigma.begin(), rc.sigma.begin() + want);
        out.residual = rc.residual;
        out.converged = true;
        break;
      }
      next_check = steps + std::max(4, steps / 8);
    }
  }

  if (out.sigma.empty() && !alpha.empty()) {
    // alpha_{k+1} vanished: the wide bidiagonal carries the exact values.
    const std::vector<double> sv = wide_ritz(alpha, beta);
    out.sigma.assign(sv.begin(), sv.begin() + std::min<std::size_t>(want, sv.size()));
    out.residual = 0.0;
  }
  while (static_cast<int>(out.sigma.size()) < want) out.sigma.push_back(0.0);
  return out;
}

}  // namespace muonpp::linalg
