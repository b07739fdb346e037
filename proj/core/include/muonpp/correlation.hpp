#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "muonpp/linalg.hpp"

namespace muonpp::corr {

using linalg::Matrix;

/// Exchangeable Gaussian weight model: every entry N(0, sigma_n^2), every pair
/// of distinct entries correlated with rho_n. Shape m x n with m <= n.
struct CorrelatedWeightSpec {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  double sigma_n = 0.0;
  double rho_n = 0.0;

  double c() const { return static_cast<double>(m) / static_cast<double>(n); }
  /// -1 / (m n - 1): the smallest rho for which the covariance is PSD.
  double min_rho() const;
  /// Throws InvalidInput naming the violated constraint.
  void validate() const;
};

/// Eigenvalues of the m n x m n covariance: sigma^2 (1 - rho) on 1-perp and
/// sigma^2 ((1 - rho) + rho m n) along the all-ones direction.
std::pair<double, double> covariance_eigenvalues(const CorrelatedWeightSpec& spec);

struct CorrelatedDraw {
  Matrix weight;
  double z = 0.0;  // shared N(0, 1) factor; 0 for rho < 0
  std::uint64_t seed = 0;
};

/// W = sigma (sqrt(rho) z J + sqrt(1 - rho) Phi), Phi iid N(0, 1), J all ones.
/// Deterministic in `seed`: z is the first draw, then Phi in row-major order.
CorrelatedDraw sample_correlated(const CorrelatedWeightSpec& spec, std::uint64_t seed);

/// Method-of-moments correlation estimate (m n Wbar^2 - s2) / ((m n - 1) s2)
/// with s2 the mean of squared entries (no Bessel correction). One pass.
double mom_rho(const Matrix& w);

/// Value the estimator concentrates on for a fixed draw of z:
/// rho z^2 / (rho z^2 + 1 - rho).
double conditional_mom_limit(double rho, double z);

struct FrobeniusPrediction {
  double value = 0.0;
  /// rho_n >= 0.1: outside the vanishing-correlation regime the prediction assumes.
  bool outside_regime = false;
};

FrobeniusPrediction predict_frobenius(const CorrelatedWeightSpec& spec);

enum class Regime { sub_critical, super_critical, boundary, non_vanishing };

std::string to_string(Regime r);

/// Finite-n classification: rho >= 0.1 -> non_vanishing; n rho < 0.1 ->
/// sub_critical; n rho > 10 -> super_critical; otherwise boundary.
Regime classify_regime(const CorrelatedWeightSpec& spec);

struct SpectralPrediction {
  Regime regime = Regime::sub_critical;
  double predicted_norm = 0.0;
  std::optional<double> tau;
};

/// Which threshold selects the outlier branch of the boundary limit.
enum class BoundaryRule {
  z2_tau_sqrt_c,       // Z^2 tau sqrt(c) <= 1 -> 1
  abs_z_c_quarter_tau  // |Z| c^{1/4} tau <= 1 -> 1
};

/// Limit of ||W|| / (sigma (sqrt m + sqrt n)) when n rho -> tau.
double boundary_limit_factor(double z, double tau, double c, BoundaryRule rule = BoundaryRule::z2_tau_sqrt_c);

SpectralPrediction predict_spectral(const CorrelatedWeightSpec& spec, double z);

/// ||W||_F^2 / ||W||^2.
double stable_rank(const Matrix& w);
double stable_rank(const Matrix& w, double spectral_norm);

struct RhoSample {
  double n = 0.0;
  double rho_hat = 0.0;
};

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root mean square residual of the log-log fit.
  double residual = 0.0;
};

/// Ordinary least squares of log(rho_hat) on log(n).
PowerLawFit fit_rho_exponent(std::span<const RhoSample> samples);

struct TriggerOutcome {
  Matrix weight;
  bool fired = false;
  double threshold = 0.0;  // C (n^{-1/2} + m^{-1/2})
  double factor = 1.0;
};

/// First-crossing rescale: when not yet fired and rho_cur exceeds
/// C (n^{-1/2} + m^{-1/2}), multiply W by sqrt(rho_prev / rho_cur).
TriggerOutcome rescale_on_trigger(const Matrix& w, double rho_prev, double rho_cur, double C, bool already_fired);

}  // namespace muonpp::corr
