#include <algorithm>
#include <cmath>
#include <limits>

#include "muonpp/errors.hpp"
#include "muonpp/spectral_update.hpp"

namespace muonpp::optim {

namespace {

struct Probe {
  double nu = 0.0;
  double objective = 0.0;
  double subgradient = 0.0;
};

class DualOracle {
 public:
  DualOracle(const Matrix& g, const Vector& u1, const Vector& v1, const DualOptions& options)
      : g_(g), u1_(u1), v1_(v1), uv_(u1 * v1.transpose()), options_(options) {}

  Probe probe(double nu) {
    ++evaluations_;
    const Matrix a = g_ + nu * uv_;
    Probe p;
    p.nu = nu;
    if (options_.msign_mode == linalg::MsignMode::exact) {
      const linalg::Svd svd = linalg::jacobi_svd(a);
      p.objective = svd.sigma.sum();
      const Matrix d = sign_from(svd, a);
      p.subgradient = u1_.dot(d * v1_);
    } else {
      const Matrix d = linalg::msign(a, linalg::MsignMode::iterative, options_.ns_steps);
      p.objective = linalg::inner(a, d);
      p.subgradient = u1_.dot(d * v1_);
    }
    return p;
  }

  // Element of the subdifferential of ||.||_* at G + nu u1 v1^T whose pairing
  // with u1 v1^T is as close to zero as the subdifferential allows.
  Matrix stationary_delta(double nu, bool& degenerate) const {
    const Matrix a = g_ + nu * uv_;
    const linalg::Svd svd = linalg::jacobi_svd(a);
    const double scale = std::max(g_.norm(), 1.0);
    degenerate = svd.sigma.size() == 0 || svd.sigma[0] <= 1e-12 * scale;
    if (degenerate) return Matrix::Zero(a.rows(), a.cols());

    Matrix d = sign_from(svd, a);
    const double g0 = u1_.dot(d * v1_);
    const double kink = 1e-9 * svd.sigma[0];
    Eigen::Index rank = 0;
    while (rank < svd.sigma.size() && svd.sigma[rank] > kink) ++rank;
    if (std::abs(g0) <= 1e-14) return d;

    // Rank-deficient point: add t * a b^T with a, b the parts of u1, v1 outside
    // the retained singular subspaces; |t| <= 1 keeps ||delta|| <= 1.
    Vector a_dir = u1_ - svd.u.leftCols(rank) * (svd.u.leftCols(rank).transpose() * u1_);
    Vector b_dir = v1_ - svd.v.leftCols(rank) * (svd.v.leftCols(rank).transpose() * v1_);
    const double an = a_dir.norm();
    const double bn = b_dir.norm();
    if (an < 1e-12 || bn < 1e-12) return d;
    d = svd.u.leftCols(rank) * svd.v.leftCols(rank).transpose();
    const double base = u1_.dot(d * v1_);
    const double t = std::clamp(-base / (an * bn), -1.0, 1.0);
    d += (t / (an * bn)) * (a_dir * b_dir.transpose());
    return d;
  }

  int evaluations() const { return evaluations_; }

 private:
  static Matrix sign_from(const linalg::Svd& svd, const Matrix& a) {
    if (svd.sigma.size() == 0 || svd.sigma[0] == 0.0) return Matrix::Zero(a.rows(), a.cols());
    const double thr = linalg::rank_threshold(a, svd.sigma[0]);
    Eigen::Index rank = 0;
    while (rank < svd.sigma.size() && svd.sigma[rank] > thr) ++rank;
    return svd.u.leftCols(rank) * svd.v.leftCols(rank).transpose();
  }

  const Matrix& g_;
  const Vector& u1_;
  const Vector& v1_;
  Matrix uv_;
  DualOptions options_;
  int evaluations_ = 0;
};

constexpr double kZeroSubgradient = 1e-14;

}  // namespace

DualSolve dual_delta(const Matrix& g, const Vector& u1, const Vector& v1, const DualOptions& options) {
  linalg::require_finite(g, "dual_delta");
  if (u1.size() != g.rows() || v1.size() != g.cols()) {
    throw InvalidInput("dual_delta: singular vector lengths do not match G");
  }
  if (std::abs(u1.norm() - 1.0) > 1e-10 || std::abs(v1.norm() - 1.0) > 1e-10) {
    throw InvalidInput("dual_delta: u1 and v1 must be unit vectors");
  }
  if (!(options.step_size > 0.0) || options.iterations <= 0) {
    throw InvalidInput("dual_delta: step_size and iterations must be positive");
  }

  DualOracle oracle(g, u1, v1, options);
  Probe current = oracle.probe(0.0);
  Probe best = current;
  // Tightest points seen on either side of the minimizer.
  bool have_lo = false;
  bool have_hi = false;
  double lo = 0.0;
  double hi = 0.0;
  bool exact = false;
  auto observe = [&](const Probe& p) {
    if (p.objective < best.objective) best = p;
    if (std::abs(p.subgradient) <= kZeroSubgradient) {
      exact = true;
      if (p.objective <= best.objective) best = p;
    } else if (p.subgradient < 0.0) {
      if (!have_lo || p.nu > lo) lo = p.nu;
      have_lo = true;
    } else {
      if (!have_hi || p.nu < hi) hi = p.nu;
      have_hi = true;
    }
  };
  observe(current);

  int k = 1;
  for (; k <= options.iterations && !exact; ++k) {
    const double step = options.step_size / std::sqrt(static_cast<double>(k));
    current = oracle.probe(current.nu - step * current.subgradient);
    observe(current);
  }

  if (options.polish && !exact) {
    // Expand until the subgradient changes sign, then bisect; the subgradient of
    // a convex function is monotone in nu.
    double reach = std::max(1.0, std::abs(best.nu));
    for (int i = 0; i < 200 && !have_lo && !exact; ++i, reach *= 2.0) observe(oracle.probe(best.nu - reach));
    reach = std::max(1.0, std::abs(best.nu));
    for (int i = 0; i < 200 && !have_hi && !exact; ++i, reach *= 2.0) observe(oracle.probe(best.nu + reach));
    for (int i = 0; i < 200 && have_lo && have_hi && !exact; ++i) {
      const double width = hi - lo;
      if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(lo), std::abs(hi)})) {
        break;
      }
      observe(oracle.probe(lo + 0.5 * width));
    }
  }

  DualSolve out;
  out.nu_min = best.nu;
  out.objective = best.objective;
  out.iterations = oracle.evaluations();
  out.delta = oracle.stationary_delta(best.nu, out.degenerate);
  out.subgradient = u1.dot(out.delta * v1);
  return out;
}

}  // namespace muonpp::optim
