#pragma once

#include <cstdint>
#include <string>

#include "muonpp/linalg.hpp"

namespace muonpp::optim {

using linalg::Matrix;
using linalg::Vector;

/// Per-layer spectral target S = sqrt(n_out / n_in).
struct SpectralTarget {
  Eigen::Index n_out = 0;
  Eigen::Index n_in = 0;
  double S = 0.0;

  static SpectralTarget for_shape(Eigen::Index n_out, Eigen::Index n_in);
};

struct MuonPPState {
  Matrix momentum;
  double mu = 0.0;
  SpectralTarget target;
  std::int64_t step = 0;

  /// Zero momentum, step 0.
  static MuonPPState init(Eigen::Index rows, Eigen::Index cols, double mu);
};

struct StepOptions {
  linalg::MsignMode msign_mode = linalg::MsignMode::exact;
  int ns_steps = 30;
  /// Feed mu * M_t + G_t to msign instead of M_t.
  bool nesterov = false;
  linalg::PowerIterationOptions power;
  /// Skip the post-step spectral norm (reported as NaN).
  bool measure_norm_after = true;
};

struct StepReport {
  Matrix delta;
  Matrix new_weight;
  double spectral_norm_after = 0.0;
  double admissible_eta = 0.0;
  bool rescaled = false;
  double gap_before = 0.0;

  std::int64_t step = 0;
  double eta = 0.0;
  double S = 0.0;
  double delta_residual = 0.0;
  linalg::SingularInfo top;  // leading pair of the pre-step weight
};

struct StepResult {
  Matrix weight;
  MuonPPState state;
  StepReport report;
};

/// (sigma1 - sigma2) / sigma1, with the gap taken as 0 when it is below
/// 1e-8 * sigma1.
double admissible_eta(const Matrix& w);
double admissible_eta(const linalg::SingularInfo& info);

/// One Muon++ step: project the momentum away from the top singular pair of W,
/// take its matrix sign, and move by eta * S along it.
StepResult muonpp_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                       const StepOptions& options = {});

/// Muon++ followed by the direct rescaling W <- S * W / ||W||.
StepResult muonpp_rescale_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                               const StepOptions& options = {});

struct RescaleOutcome {
  Matrix weight;
  double norm_before = 0.0;
  bool rescaled = false;
};

/// S * W / ||W||; `rescaled` is set when | ||W|| - S | > 1e-9 * S.
RescaleOutcome rescale_to_target(const Matrix& w, double S);

struct BaselineResult {
  Matrix weight;
  MuonPPState state;
  double delta_residual = 0.0;
};

/// Plain Muon: W - eta * msign(M), optionally scaled by 0.2 * sqrt(max(m, n)).
BaselineResult muon_baseline_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                                  bool match_scaling, const StepOptions& options = {});

/// Multiplier applied to msign(M) by the magnitude-matched Muon variant.
double muon_match_factor(Eigen::Index rows, Eigen::Index cols);

struct CascadeResult {
  Matrix weight;
  double net_update_spectral_norm = 0.0;
};

/// Normalize the gradient, step, then renormalize the weight to
/// sigma_mult * sqrt(m / n). Returns ||W' - W|| alongside.
CascadeResult cascade_step(const Matrix& w, const Matrix& g, double eta, double sigma_mult = 1.0);

struct DualSolve {
  double nu_min = 0.0;
  double objective = 0.0;  // F(nu_min) = ||G + nu_min u1 v1^T||_*
  Matrix delta;
  int iterations = 0;
  /// <u1 v1^T, delta>; zero at an exact minimizer.
  double subgradient = 0.0;
  /// G + nu_min u1 v1^T vanished; delta is the zero matrix.
  bool degenerate = false;
};

struct DualOptions {
  double step_size = 1.0;
  int iterations = 500;
  linalg::MsignMode msign_mode = linalg::MsignMode::exact;
  int ns_steps = 30;
  /// Bisection on the sign of the subgradient after the descent phase.
  bool polish = true;
};

/// Minimizes F(nu) = ||G + nu u1 v1^T||_* by subgradient descent with steps
/// step_size / sqrt(k), using <u1 v1^T, msign(G + nu u1 v1^T)> as the oracle.
DualSolve dual_delta(const Matrix& g, const Vector& u1, const Vector& v1, const DualOptions& options = {});

struct TokenBudget {
  double T_threshold = 0.0;
  double token_threshold = 0.0;
};

/// Steps after which the cumulative update of a sign-like optimizer dominates
/// the initialization: T >= 2 / eta * sqrt(n) * init_range / base_width.
TokenBudget token_budget_threshold(double eta_peak, std::int64_t n, double initializer_range,
                                   std::int64_t base_width, std::int64_t batch_size);

/// Header and row for the per-step CSV log.
std::string step_report_csv_header();
std::string step_report_csv_row(const StepReport& report);

}  // namespace muonpp::optim
