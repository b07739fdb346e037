#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "muonpp/mlp.hpp"
#include "muonpp/spectral_update.hpp"

namespace muonpp::train {

enum class OptimizerKind { muonpp, muonpp_rescale, muon, cascade };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& text);

struct TrainOptions {
  OptimizerKind optimizer = OptimizerKind::muonpp_rescale;
  double eta = 0.05;
  double mu = 0.9;
  linalg::MsignMode msign_mode = linalg::MsignMode::iterative;
  int ns_steps = 30;
  bool nesterov = false;
  /// Plain Muon multiplies msign(M) by 0.2 sqrt(max(m, n)).
  bool muon_match_scaling = true;
  /// Fixed held-out batch for the recorded loss and the h statistics.
  int eval_batch = 256;
  double divergence_loss = 1e6;
  /// Called with the weights after initialization (step 0) and after every step.
  std::function<void(int step, const Weights& weights)> on_step;
};

struct LayerRecord {
  double spectral_norm_W = 0.0;       // after the step
  double update_spectral_norm = 0.0;  // ||W_t - W_{t-1}||
  double h_l2 = 0.0;                  // mean over the eval batch of ||h_l||_2
  double delta_h_l2 = 0.0;            // mean over the eval batch of ||h_l,t - h_l,t-1||_2
  double gap = 0.0;                   // sigma1 - sigma2 of the pre-step weight (NaN if not computed)
  double admissible_eta = 0.0;        // NaN if not computed
  bool rescaled = false;
};

struct TrainRecord {
  int step = 0;  // 0 is the initialization
  double loss = 0.0;
  double batch_loss = 0.0;  // training batch loss before the step (NaN at step 0)
  std::vector<LayerRecord> per_layer;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  Weights weights;
  bool diverged = false;
  std::string diagnostic;
};

/// Trains on a regression task whose targets come from a frozen random teacher
/// with the same widths. Batches are redrawn every step from a derived seed.
TrainResult train_run(const MLPConfig& config, const TrainOptions& options);

std::string train_csv(const TrainResult& result);

struct CoordinateRow {
  int width_multiplier = 1;
  int step = 0;
  int layer = 0;  // 1-based
  Eigen::Index width = 0;
  double h_normalized = 0.0;        // ||h_l|| / sqrt(n_l)
  double delta_h_normalized = 0.0;  // ||Delta h_l|| / sqrt(n_l)
};

struct CoordinateCheck {
  std::vector<CoordinateRow> rows;
  /// Largest max/min ratio across widths over hidden layers and steps >= from_step.
  double worst_h_ratio = 0.0;
  double worst_delta_h_ratio = 0.0;
  int from_step = 3;
  double band = 2.0;
  /// Empty when fewer than two widths were run.
  std::optional<bool> passed;
  bool diverged = false;
};

/// Multiplies every hidden width of `base` by each multiplier and trains.
CoordinateCheck coordinate_check(const MLPConfig& base, const std::vector<int>& multipliers,
                                 const TrainOptions& options, int from_step = 3, double band = 2.0);

MLPConfig scale_hidden(const MLPConfig& base, int multiplier);

std::string coordinate_csv(const CoordinateCheck& check);

struct SweepRow {
  int width_multiplier = 1;
  double eta = 0.0;
  double final_loss = 0.0;  // +inf for diverged runs
  bool argmin = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  /// Largest |argmin index difference| between adjacent widths, in grid steps.
  int max_argmin_drift = 0;
};

/// Final loss per (width, eta). eta_grid must be positive and strictly increasing.
SweepTable lr_sweep(const MLPConfig& base, const std::vector<int>& multipliers, const std::vector<double>& eta_grid,
                    const TrainOptions& options);

std::string sweep_csv(const SweepTable& table);

}  // namespace muonpp::train
