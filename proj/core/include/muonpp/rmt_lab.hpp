#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "muonpp/correlation.hpp"
#include "muonpp/experiment_report.hpp"

namespace muonpp::rmt {

/// Below this many trials a verdict is reported as inconclusive.
inline constexpr int kMinTrials = 10;
/// Above this fraction of unconverged spectral solves a verdict is inconclusive.
inline constexpr double kMaxNonConvergence = 0.01;

struct GapOptions {
  std::vector<Eigen::Index> ns;
  int trials = 30;
  std::uint64_t seed = 0;
  double lanczos_tol = 1e-9;
};

/// sigma1 - sigma2 of W = A / sqrt(n), A n x n standard Gaussian. Passes when the
/// median gap strictly decreases along ns and the last median is at most half
/// the first.
ExperimentReport run_gap_experiment(const GapOptions& options);
ExperimentReport run_gap_experiment(std::span<const Eigen::Index> ns, int trials, std::uint64_t seed);

struct PreservationOptions {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> dims;
  /// Total number of random instances, assigned to dims round-robin.
  int trials = 500;
  std::uint64_t seed = 0;
  /// eta = eta_factor * (sigma1 - sigma2) / sigma1. Values above 1 probe the
  /// necessity of the admissibility bound.
  double eta_factor = 0.9;
  /// Append the fixed diag(1, 0.2), diag(0, -1), eta = 0.9 instance.
  bool include_counterexample = true;
  double tolerance = 1e-8;
};

/// Samples W rescaled to ||W|| = S, an admissible direction msign of a projected
/// Gaussian, and checks | ||W - eta S Delta|| - S | <= tolerance * S.
ExperimentReport run_preservation_experiment(const PreservationOptions& options);
ExperimentReport run_preservation_experiment(std::span<const std::pair<Eigen::Index, Eigen::Index>> dims,
                                             int trials, std::uint64_t seed);

/// rho_n = coefficient * law(n).
enum class RhoLaw { constant, inv_n, inv_sqrt_n, inv_n2 };
/// sigma_n: the template value, 1 / n, or n^-1 rho_n^-1/2.
enum class SigmaLaw { fixed, inv_n, key_diff };

std::string to_string(RhoLaw law);
std::string to_string(SigmaLaw law);
RhoLaw parse_rho_law(const std::string& text);
SigmaLaw parse_sigma_law(const std::string& text);
double rho_for(RhoLaw law, double coefficient, Eigen::Index n);

struct NormRatioOptions {
  /// Supplies c = m / n, sigma (for SigmaLaw::fixed) and the rho coefficient.
  corr::CorrelatedWeightSpec spec_template{1, 1, 1.0, 1.0};
  RhoLaw rho_law = RhoLaw::inv_n2;
  SigmaLaw sigma_law = SigmaLaw::fixed;
  std::vector<Eigen::Index> ns;
  int trials = 30;
  std::uint64_t seed = 0;
  double lanczos_tol = 1e-9;
};

/// Draws correlated weights and compares ||W||_F and ||W|| with the regime
/// predictions. Checks, per n: Frobenius median ratio in [0.99, 1.01] (skipped
/// for rho >= 0.1); sub-critical median ratio in [0.97, 1.03]; super-critical
/// ratio within 5% of |z| on >= 90% of draws and median srank * rho in
/// [0.2, 5]; boundary median ratio in [0.9, 1.1]. Non-vanishing: median ||W||
/// varies by less than 3x across ns. With SigmaLaw::key_diff in the
/// super-critical regime, every ||W|| lies in [0.1, 10] * |z| sqrt(c).
ExperimentReport run_norm_ratio_experiment(const NormRatioOptions& options);

/// Compares mom_rho on each draw with rho z^2 / (rho z^2 + 1 - rho); passes when
/// the mean absolute deviation is at most `tolerance` for every spec.
ExperimentReport run_mom_experiment(std::span<const corr::CorrelatedWeightSpec> specs, int trials,
                                    std::uint64_t seed, double tolerance = 0.01);

double median(std::vector<double> values);

}  // namespace muonpp::rmt
