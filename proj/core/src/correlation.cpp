#include "muonpp/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "muonpp/errors.hpp"
#include "muonpp/matrix_io.hpp"
#include "muonpp/seeding.hpp"

namespace muonpp::corr {

double CorrelatedWeightSpec::min_rho() const {
  const double k = static_cast<double>(m) * static_cast<double>(n);
  return -1.0 / (k - 1.0);
}

void CorrelatedWeightSpec::validate() const {
  if (m <= 0 || n <= 0) throw InvalidInput("correlated weight: m and n must be positive");
  if (m > n) throw InvalidInput("correlated weight: need m <= n so that c = m / n lies in (0, 1]");
  if (m * n < 2) throw InvalidInput("correlated weight: need at least two entries");
  if (!std::isfinite(sigma_n) || sigma_n < 0.0) throw InvalidInput("sigma must be finite and non-negative");
  const double lo = min_rho();
  if (!std::isfinite(rho_n) || rho_n < lo || rho_n > 1.0) {
    std::ostringstream os;
    os << "rho = " << io::format_double(rho_n) << " outside the admissible interval [-1/(mn-1), 1] = ["
       << io::format_double(lo) << ", 1]";
    throw InvalidInput(os.str());
  }
}

std::pair<double, double> covariance_eigenvalues(const CorrelatedWeightSpec& spec) {
  const double s2 = spec.sigma_n * spec.sigma_n;
  const double k = static_cast<double>(spec.m) * static_cast<double>(spec.n);
  return {s2 * (1.0 - spec.rho_n), s2 * ((1.0 - spec.rho_n) + spec.rho_n * k)};
}

CorrelatedDraw sample_correlated(const CorrelatedWeightSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z = normal(rng);
  Matrix phi = gaussian_matrix(spec.m, spec.n, rng);

  CorrelatedDraw draw;
  draw.seed = seed;
  const double rho = spec.rho_n;
  if (rho >= 0.0) {
    draw.z = z;
    draw.weight = (spec.sigma_n * std::sqrt(1.0 - rho)) * phi;
    draw.weight.array() += spec.sigma_n * std::sqrt(rho) * z;
  } else {
    // Negative exchangeable correlation: inflate the deviation from the mean
    // direction, X = sqrt(1 - rho) (Phi + b mean(Phi) 1).
    const double k = static_cast<double>(spec.m) * static_cast<double>(spec.n);
    double num = 1.0 + (k - 1.0) * rho;
    if (num <= 4.0 * k * std::numeric_limits<double>::epsilon()) num = 0.0;  // rho at the bound, up to rounding
    const double b = std::sqrt(num / (1.0 - rho)) - 1.0;
    const double mean = phi.mean();
    draw.z = 0.0;
    phi.array() += b * mean;
    draw.weight = (spec.sigma_n * std::sqrt(1.0 - rho)) * phi;
  }
  return draw;
}

double mom_rho(const Matrix& w) {
  linalg::require_finite(w, "mom_rho");
  if (w.size() < 2) throw InvalidInput("mom_rho: need at least two entries");
  const long double k = static_cast<long double>(w.size());
  // Single pass over d = x - x0. With s2 = v + mean^2 (v the biased variance)
  // the estimator reads ((K - 1) mean^2 - v) / ((K - 1) (mean^2 + v)), which is
  // exactly 1 for constant input (v = 0) and exactly -1/(K - 1) for zero mean.
  const long double x0 = w(0, 0);
  long double sd = 0.0L;
  long double sd2 = 0.0L;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const long double d = static_cast<long double>(w(i, j)) - x0;
      sd += d;
      sd2 += d * d;
    }
  }
  const long double mean_d = sd / k;
  const long double v = std::max(0.0L, sd2 / k - mean_d * mean_d);
  const long double mean = x0 + mean_d;
  const long double m2 = mean * mean;
  if (m2 + v == 0.0L) throw DegenerateInput("mom_rho: all-zero matrix");
  const long double a = (k - 1.0L) * m2;
  return static_cast<double>((a - v) / (a + (k - 1.0L) * v));
}

double conditional_mom_limit(double rho, double z) {
  const double a = rho * z * z;
  return a / (a + (1.0 - rho));
}

FrobeniusPrediction predict_frobenius(const CorrelatedWeightSpec& spec) {
  spec.validate();
  FrobeniusPrediction p;
  p.value = spec.sigma_n * std::sqrt(static_cast<double>(spec.m) * static_cast<double>(spec.n));
  p.outside_regime = spec.rho_n >= 0.1;
  return p;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::sub_critical:
      return "sub_critical";
    case Regime::super_critical:
      return "super_critical";
    case Regime::boundary:
      return "boundary";
    case Regime::non_vanishing:
      return "non_vanishing";
  }
  return "unknown";
}

Regime classify_regime(const CorrelatedWeightSpec& spec) {
  if (spec.rho_n >= 0.1) return Regime::non_vanishing;
  const double n_rho = static_cast<double>(spec.n) * spec.rho_n;
  if (n_rho < 0.1) return Regime::sub_critical;
  if (n_rho > 10.0) return Regime::super_critical;
  return Regime::boundary;
}

double boundary_limit_factor(double z, double tau, double c, BoundaryRule rule) {
  if (!(tau > 0.0) || !(c > 0.0 && c <= 1.0)) throw InvalidInput("boundary_limit_factor: need tau > 0, c in (0, 1]");
  const double z2 = z * z;
  const double test = rule == BoundaryRule::z2_tau_sqrt_c ? z2 * tau * std::sqrt(c)
                                                          : std::abs(z) * std::pow(c, 0.25) * tau;
  if (test <= 1.0) return 1.0;
  return std::sqrt((z2 * tau + 1.0) * (z2 * tau * c + 1.0)) / (std::abs(z) * (1.0 + std::sqrt(c)) * std::sqrt(tau));
}

SpectralPrediction predict_spectral(const CorrelatedWeightSpec& spec, double z) {
  spec.validate();
  const double m = static_cast<double>(spec.m);
  const double n = static_cast<double>(spec.n);
  const double edge = spec.sigma_n * (std::sqrt(m) + std::sqrt(n));
  SpectralPrediction p;
  p.regime = classify_regime(spec);
  switch (p.regime) {
    case Regime::sub_critical:
      p.predicted_norm = edge;
      break;
    case Regime::boundary:
      p.tau = n * spec.rho_n;
      p.predicted_norm = edge * boundary_limit_factor(z, *p.tau, spec.c());
      break;
    case Regime::super_critical:
    case Regime::non_vanishing:
      // Rank-one term sigma sqrt(rho) |z| ||J||, ||J|| = sqrt(m n).
      p.predicted_norm = spec.sigma_n * std::sqrt(m * n * spec.rho_n) * std::abs(z);
      break;
  }
  return p;
}

double stable_rank(const Matrix& w, double spectral_norm) {
  if (!(spectral_norm > 0.0)) throw DegenerateInput("stable_rank: zero matrix");
  return w.squaredNorm() / (spectral_norm * spectral_norm);
}

double stable_rank(const Matrix& w) {
  linalg::require_finite(w, "stable_rank");
  return stable_rank(w, linalg::spectral_norm(w));
}

PowerLawFit fit_rho_exponent(std::span<const RhoSample> samples) {
  if (samples.size() < 2) throw InvalidInput("fit_rho_exponent: need at least two samples");
  double sx = 0.0;
  double sy = 0.0;
  for (const RhoSample& s : samples) {
    if (!(s.n > 0.0) || !std::isfinite(s.n)) throw InvalidInput("fit_rho_exponent: n must be positive");
    if (!(s.rho_hat > 0.0) || !std::isfinite(s.rho_hat)) {
      throw InvalidInput("fit_rho_exponent: rho_hat must be positive (log undefined otherwise)");
    }
    sx += std::log(s.n);
    sy += std::log(s.rho_hat);
  }
  const double count = static_cast<double>(samples.size());
  const double mx = sx / count;
  const double my = sy / count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const RhoSample& s : samples) {
    const double dx = std::log(s.n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(s.rho_hat) - my);
  }
  if (sxx == 0.0) throw InvalidInput("fit_rho_exponent: need at least two distinct widths");
  PowerLawFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const RhoSample& s : samples) {
    const double r = std::log(s.rho_hat) - (fit.intercept + fit.slope * std::log(s.n));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / count);
  return fit;
}

TriggerOutcome rescale_on_trigger(const Matrix& w, double rho_prev, double rho_cur, double C, bool already_fired) {
  linalg::require_finite(w, "rescale_on_trigger");
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidInput("rescale_on_trigger: C must be positive");
  TriggerOutcome out;
  const double m = static_cast<double>(w.rows());
  const double n = static_cast<double>(w.cols());
  out.threshold = C * (1.0 / std::sqrt(n) + 1.0 / std::sqrt(m));
  out.fired = already_fired;
  if (already_fired || !(rho_cur > out.threshold)) {
    out.weight = w;
    return out;
  }
  if (!(rho_prev > 0.0) || !(rho_cur > 0.0)) {
    throw InvalidInput("rescale_on_trigger: rho estimates must be positive when the trigger fires");
  }
  out.factor = std::sqrt(rho_prev / rho_cur);
  out.weight = w * out.factor;
  out.fired = true;
  return out;
}

}  // namespace muonpp::corr
