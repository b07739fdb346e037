#include "muonpp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detail/start_vector.hpp"
#include "muonpp/errors.hpp"

namespace muonpp::linalg {

void require_finite(const Matrix& m, std::string_view what) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidInput(std::string(what) + ": matrix must have positive dimensions");
  }
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": matrix contains non-finite entries");
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()) + ")");
  }
}

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  return a.cwiseProduct(b).sum();
}

namespace {

struct PowerRun {
  double sigma = 0.0;
  Vector u;
  Vector v;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on apply_t(apply(.)). `scale` normalizes the residual; when it
// is zero the running sigma estimate is used instead. A run whose image
// collapses below `zero_floor` reports sigma = 0.
template <class Apply, class ApplyT>
PowerRun power_run(Apply&& apply, ApplyT&& apply_t, Vector v, double scale, double tol,
                   int max_iter, double zero_floor) {
  PowerRun run;
  run.v = v;
  for (int it = 1; it <= max_iter; ++it) {
    Vector u = apply(v);
    const double sigma = u.norm();
    run.iterations = it;
    if (sigma <= zero_floor) {
      run.sigma = 0.0;
      run.u = Vector::Zero(u.size());
      run.v = v;
      run.residual = 0.0;
      run.converged = true;
      return run;
    }
    u /= sigma;
    Vector z = apply_t(u);
    const double denom = scale > 0.0 ? scale : sigma;
    const double residual = (z - sigma * v).norm() / denom;
    run.sigma = sigma;
    run.u = u;
    run.v = v;
    run.residual = residual;
    if (residual <= tol) {
      run.converged = true;
      return run;
    }
    const double zn = z.norm();
    if (zn == 0.0) break;
    v = z / zn;
  }
  return run;
}

void fix_sign(Vector& u, Vector& v) {
  const double floor = 1e-14 * u.norm();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > floor) {
      if (u[i] < 0.0) {
        u = -u;
        v = -v;
      }
      return;
    }
  }
}

}  // namespace

SingularInfo top_two_singular(const Matrix& m, const PowerIterationOptions& options) {
  require_finite(m, "top_two_singular");
  if (!(options.tol > 0.0)) throw InvalidInput("top_two_singular: tol must be positive");
  if (options.max_iter <= 0) throw InvalidInput("top_two_singular: max_iter must be positive");
  const double fro = m.norm();
  if (fro == 0.0) throw DegenerateInput("top_two_singular: all-zero matrix");

  const Eigen::Index cols = m.cols();
  auto checked_start = [&](const Vector& s) -> Vector {
    if (s.size() == 0) return detail::default_start(cols);
    if (s.size() != cols || !s.allFinite() || s.norm() == 0.0) {
      throw InvalidInput("top_two_singular: start vector has wrong length or is zero");
    }
    return s.normalized();
  };

  const double zero_floor = 1e-300;
  Vector start1 = checked_start(options.start_v1);
  if ((m * start1).norm() <= 1e-14 * fro) {
    // Start vector in the null space; restart on the heaviest column.
    Eigen::Index j = 0;
    m.colwise().norm().maxCoeff(&j);
    start1 = Vector::Unit(cols, j);
  }
  PowerRun lead = power_run([&](const Vector& x) -> Vector { return m * x; },
                            [&](const Vector& y) -> Vector { return m.transpose() * y; },
                            start1, 0.0, options.tol, options.max_iter, zero_floor);

  SingularInfo info;
  info.sigma1 = lead.sigma;
  info.u1 = lead.u;
  info.v1 = lead.v;
  fix_sign(info.u1, info.v1);

  const double s1 = info.sigma1;
  const Vector& u1 = info.u1;
  const Vector& v1 = info.v1;
  Vector start2 = options.start_v2.size() == 0 ? detail::alternate_start(cols) : checked_start(options.start_v2);
  start2 -= v1 * v1.dot(start2);
  if (start2.norm() <= 1e-12 && options.start_v2.size() == 0) {
    // Fall back to the coordinate direction least aligned with v1.
    Eigen::Index j = 0;
    v1.cwiseAbs().minCoeff(&j);
    start2 = Vector::Unit(cols, j) - v1 * v1[j];
  }
  double sigma2 = 0.0;
  double res2 = 0.0;
  int it2 = 0;
  bool conv2 = true;
  if (start2.norm() > 1e-12 && std::min(m.rows(), m.cols()) > 1) {
    start2.normalize();
    PowerRun second = power_run(
        [&](const Vector& x) -> Vector { return m * x - u1 * (s1 * v1.dot(x)); },
        [&](const Vector& y) -> Vector { return m.transpose() * y - v1 * (s1 * u1.dot(y)); },
        start2, s1, options.tol, options.max_iter, 1e-13 * s1);
    sigma2 = std::min(second.sigma, s1);
    res2 = second.residual;
    it2 = second.iterations;
    conv2 = second.converged;
  }

  info.sigma2 = sigma2;
  info.gap = info.sigma1 - info.sigma2;
  info.converged = lead.converged && conv2;
  info.residual = std::max(lead.residual, res2);
  info.iterations = lead.iterations + it2;
  return info;
}

SingularInfo top_two_singular(const Matrix& m, double tol, int max_iter) {
  PowerIterationOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return top_two_singular(m, options);
}

double rank_threshold(const Matrix& m, double sigma1) {
  return static_cast<double>(std::max(m.rows(), m.cols())) *
         std::numeric_limits<double>::epsilon() * sigma1;
}

MsignResult msign_with_residual(const Matrix& m, MsignMode mode, int steps) {
  require_finite(m, "msign");
  MsignResult out;
  if (mode == MsignMode::exact) {
    const Svd svd = jacobi_svd(m);
    out.value = Matrix::Zero(m.rows(), m.cols());
    if (svd.sigma.size() == 0 || svd.sigma[0] == 0.0) return out;
    const double thr = rank_threshold(m, svd.sigma[0]);
    Eigen::Index rank = 0;
    while (rank < svd.sigma.size() && svd.sigma[rank] > thr) ++rank;
    out.value.noalias() = svd.u.leftCols(rank) * svd.v.leftCols(rank).transpose();
    return out;
  }

  if (steps <= 0) throw InvalidInput("msign: iterative mode needs a positive step count");
  const double fro = m.norm();
  if (fro == 0.0) {
    out.value = Matrix::Zero(m.rows(), m.cols());
    return out;
  }
  Matrix x = m / fro;
  Matrix gram;
  Matrix next(m.rows(), m.cols());
  const bool tall = m.rows() >= m.cols();
  for (int k = 0; k < steps; ++k) {
    if (tall) {
      gram.noalias() = x.transpose() * x;
      next = 1.5 * x;
      next.noalias() -= 0.5 * (x * gram);
    } else {
      gram.noalias() = x * x.transpose();
      next = 1.5 * x;
      next.noalias() -= 0.5 * (gram * x);
    }
    out.residual = (next - x).norm();
    x.swap(next);
  }
  out.value = std::move(x);
  return out;
}

Matrix msign(const Matrix& m, MsignMode mode, int steps) {
  return msign_with_residual(m, mode, steps).value;
}

Matrix project_out_top(const Matrix& m, const Vector& u1, const Vector& v1) {
  require_finite(m, "project_out_top");
  if (u1.size() != m.rows() || v1.size() != m.cols()) {
    throw InvalidInput("project_out_top: singular vector lengths do not match the matrix shape");
  }
  if (std::abs(u1.norm() - 1.0) > 1e-10 || std::abs(v1.norm() - 1.0) > 1e-10) {
    throw InvalidInput("project_out_top: singular vectors must be unit length");
  }
  Matrix out = m;
  out.noalias() -= u1 * (u1.transpose() * m);
  const Vector ov = out * v1;
  out.noalias() -= ov * v1.transpose();
  return out;
}

double nuclear_norm(const Matrix& m) {
  require_finite(m, "nuclear_norm");
  return jacobi_svd(m).sigma.sum();
}

double spectral_norm(const Matrix& m, double tol) {
  require_finite(m, "spectral_norm");
  // Thin matrices: one-sided Jacobi is cheap and accurate to a few ulp relative.
  if (std::min(m.rows(), m.cols()) <= 8) return jacobi_svd(m).sigma[0];
  const LanczosResult r = top_singular_values(m, 1, tol);
  return r.sigma.empty() ? 0.0 : r.sigma.front();
}

}  // namespace muonpp::linalg
