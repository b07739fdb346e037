#include "muonpp/spectral_update.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "muonpp/errors.hpp"
#include "muonpp/matrix_io.hpp"

namespace muonpp::optim {

using linalg::MsignMode;

SpectralTarget SpectralTarget::for_shape(Eigen::Index n_out, Eigen::Index n_in) {
  if (n_out <= 0 || n_in <= 0) throw InvalidInput("SpectralTarget: dimensions must be positive");
  return {n_out, n_in, std::sqrt(static_cast<double>(n_out) / static_cast<double>(n_in))};
}

MuonPPState MuonPPState::init(Eigen::Index rows, Eigen::Index cols, double mu) {
  if (!(mu >= 0.0 && mu < 1.0)) throw InvalidInput("MuonPPState: mu must lie in [0, 1)");
  MuonPPState s;
  s.momentum = Matrix::Zero(rows, cols);
  s.mu = mu;
  s.target = SpectralTarget::for_shape(rows, cols);
  s.step = 0;
  return s;
}

namespace {

void validate_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta) {
  linalg::require_finite(w, "weight");
  linalg::require_finite(g, "gradient");
  linalg::require_same_shape(w, g, "weight/gradient");
  linalg::require_same_shape(w, state.momentum, "weight/momentum");
  if (state.target.n_out != w.rows() || state.target.n_in != w.cols()) {
    throw InvalidInput("optimizer state target does not match the weight shape");
  }
  if (!std::isfinite(eta) || eta < 0.0) throw InvalidInput("eta must be a finite non-negative number");
  if (state.step < 0) throw InvalidInput("optimizer state step must be non-negative");
}

Matrix updated_momentum(const MuonPPState& state, const Matrix& g) {
  Matrix m = state.mu * state.momentum;
  m += g;
  return m;
}

// Shared front half of both Muon++ variants: everything through W - eta S Delta.
StepResult projected_half_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                               const StepOptions& options) {
  validate_step(state, w, g, eta);
  StepResult r;
  r.state = state;
  r.state.momentum = updated_momentum(state, g);
  r.state.step = state.step + 1;

  const Matrix source = options.nesterov ? Matrix(state.mu * r.state.momentum + g) : r.state.momentum;
  linalg::SingularInfo top = linalg::top_two_singular(w, options.power);
  const Matrix projected = linalg::project_out_top(source, top.u1, top.v1);
  linalg::MsignResult d;
  if (projected.norm() <= 1e-8 * source.norm()) {
    // Source lies on the top pair up to the accuracy of u1, v1: nothing to move.
    d.value = Matrix::Zero(w.rows(), w.cols());
  } else {
    d = linalg::msign_with_residual(projected, options.msign_mode, options.ns_steps);
  }

  const double S = state.target.S;
  r.weight = w - (eta * S) * d.value;

  StepReport& rep = r.report;
  rep.delta = std::move(d.value);
  rep.delta_residual = d.residual;
  rep.admissible_eta = admissible_eta(top);
  rep.gap_before = top.gap;
  rep.step = r.state.step;
  rep.eta = eta;
  rep.S = S;
  rep.top = std::move(top);
  return r;
}

void finish_report(StepResult& r, const StepOptions& options) {
  r.report.new_weight = r.weight;
  r.report.spectral_norm_after = options.measure_norm_after ? linalg::spectral_norm(r.weight)
                                                            : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double admissible_eta(const linalg::SingularInfo& info) {
  if (!(info.sigma1 > 0.0)) throw DegenerateInput("admissible_eta: zero matrix");
  const double gap = info.sigma1 - info.sigma2;
  if (gap < 1e-8 * info.sigma1) return 0.0;
  return gap / info.sigma1;
}

double admissible_eta(const Matrix& w) {
  linalg::require_finite(w, "admissible_eta");
  return admissible_eta(linalg::top_two_singular(w));
}

StepResult muonpp_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                       const StepOptions& options) {
  StepResult r = projected_half_step(state, w, g, eta, options);
  finish_report(r, options);
  return r;
}

RescaleOutcome rescale_to_target(const Matrix& w, double S) {
  linalg::require_finite(w, "rescale_to_target");
  if (!(S > 0.0) || !std::isfinite(S)) throw InvalidInput("rescale_to_target: S must be positive");
  RescaleOutcome out;
  out.norm_before = linalg::spectral_norm(w);
  if (out.norm_before == 0.0) throw DegenerateInput("rescale_to_target: zero matrix cannot be rescaled");
  out.rescaled = std::abs(out.norm_before - S) > 1e-9 * S;
  out.weight = w * (S / out.norm_before);
  return out;
}

StepResult muonpp_rescale_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                               const StepOptions& options) {
  StepResult r = projected_half_step(state, w, g, eta, options);
  RescaleOutcome rescaled = rescale_to_target(r.weight, state.target.S);
  r.weight = std::move(rescaled.weight);
  r.report.rescaled = rescaled.rescaled;
  finish_report(r, options);
  return r;
}

double muon_match_factor(Eigen::Index rows, Eigen::Index cols) {
  return 0.2 * std::sqrt(static_cast<double>(std::max(rows, cols)));
}

BaselineResult muon_baseline_step(const MuonPPState& state, const Matrix& w, const Matrix& g, double eta,
                                  bool match_scaling, const StepOptions& options) {
  validate_step(state, w, g, eta);
  BaselineResult r;
  r.state = state;
  r.state.momentum = updated_momentum(state, g);
  r.state.step = state.step + 1;
  const Matrix source = options.nesterov ? Matrix(state.mu * r.state.momentum + g) : r.state.momentum;
  linalg::MsignResult d = linalg::msign_with_residual(source, options.msign_mode, options.ns_steps);
  const double factor = match_scaling ? muon_match_factor(w.rows(), w.cols()) : 1.0;
  r.weight = w - (eta * factor) * d.value;
  r.delta_residual = d.residual;
  return r;
}

CascadeResult cascade_step(const Matrix& w, const Matrix& g, double eta, double sigma_mult) {
  linalg::require_finite(w, "weight");
  linalg::require_finite(g, "gradient");
  linalg::require_same_shape(w, g, "weight/gradient");
  if (!std::isfinite(eta) || eta < 0.0) throw InvalidInput("cascade_step: eta must be non-negative");
  if (!(sigma_mult > 0.0) || !std::isfinite(sigma_mult)) {
    throw InvalidInput("cascade_step: sigma_mult must be positive");
  }
  const double gnorm = linalg::spectral_norm(g);
  if (gnorm == 0.0) throw DegenerateInput("cascade_step: zero gradient");

  const double scale = std::sqrt(static_cast<double>(w.rows()) / static_cast<double>(w.cols()));
  const Matrix half = w - (eta * scale / gnorm) * g;
  const double hnorm = linalg::spectral_norm(half);
  if (hnorm == 0.0) throw DegenerateInput("cascade_step: half step vanished");

  CascadeResult out;
  out.weight = half * (sigma_mult * scale / hnorm);
  out.net_update_spectral_norm = linalg::spectral_norm(out.weight - w);
  return out;
}

TokenBudget token_budget_threshold(double eta_peak, std::int64_t n, double initializer_range,
                                   std::int64_t base_width, std::int64_t batch_size) {
  if (!(eta_peak > 0.0) || !std::isfinite(eta_peak)) throw InvalidInput("eta must be positive");
  if (n <= 0) throw InvalidInput("n must be positive");
  if (!(initializer_range >= 0.0) || !std::isfinite(initializer_range)) {
    throw InvalidInput("init-range must be non-negative");
  }
  if (base_width <= 0) throw InvalidInput("base-width must be positive");
  if (batch_size <= 0) throw InvalidInput("batch-size must be positive");
  TokenBudget out;
  out.T_threshold = 2.0 * std::sqrt(static_cast<double>(n)) * initializer_range /
                    (eta_peak * static_cast<double>(base_width));
  out.token_threshold = static_cast<double>(batch_size) * out.T_threshold;
  return out;
}

std::string step_report_csv_header() {
  return "step,eta,S,gap_before,admissible_eta,spectral_norm_after,rescaled,delta_residual";
}

std::string step_report_csv_row(const StepReport& r) {
  std::ostringstream os;
  os << r.step << ',' << io::format_double(r.eta) << ',' << io::format_double(r.S) << ','
     << io::format_double(r.gap_before) << ',' << io::format_double(r.admissible_eta) << ','
     << io::format_double(r.spectral_norm_after) << ',' << (r.rescaled ? 1 : 0) << ','
     << io::format_double(r.delta_residual);
  return os.str();
}

}  // namespace muonpp::optim
