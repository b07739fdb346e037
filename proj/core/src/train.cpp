#include "muonpp/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "muonpp/errors.hpp"
#include "muonpp/matrix_io.hpp"
#include "muonpp/seeding.hpp"

namespace muonpp::train {

namespace {

constexpr std::uint64_t kTeacherTag = 0x74656163;  // "teac"
constexpr std::uint64_t kDataTag = 0x64617461;     // "data"
constexpr std::uint64_t kEvalTag = 0x6576616c;     // "eval"

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) { return io::format_double(x); }

double mean_column_norm(const Matrix& h) { return h.colwise().norm().mean(); }

struct Batch {
  Matrix x;
  Matrix y;
};

class Teacher {
 public:
  explicit Teacher(const MLPConfig& config) : activation_(config.activation) {
    MLPConfig t = config;
    t.seed = stream_key(config.seed, kTeacherTag, 0);
    weights_ = mup_init(t);
  }

  Batch draw(std::uint64_t key, Eigen::Index n0, int size) const {
    Rng rng = make_rng(key);
    Batch b;
    b.x = gaussian_matrix(n0, size, rng);
    b.y = forward(weights_, b.x, activation_).back();
    return b;
  }

 private:
  Activation activation_;
  Weights weights_;
};

void validate_options(const TrainOptions& o) {
  if (!std::isfinite(o.eta) || o.eta < 0.0) throw InvalidInput("train: eta must be finite and non-negative");
  if (!(o.mu >= 0.0 && o.mu < 1.0)) throw InvalidInput("train: mu must lie in [0, 1)");
  if (o.ns_steps <= 0) throw InvalidInput("train: ns_steps must be positive");
  if (o.eval_batch <= 0) throw InvalidInput("train: eval_batch must be positive");
  if (!(o.divergence_loss > 0.0)) throw InvalidInput("train: divergence_loss must be positive");
}

}  // namespace

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::muonpp:
      return "muonpp";
    case OptimizerKind::muonpp_rescale:
      return "muonpp_rescale";
    case OptimizerKind::muon:
      return "muon";
    case OptimizerKind::cascade:
      return "cascade";
  }
  return "muonpp";
}

OptimizerKind parse_optimizer(const std::string& text) {
  for (OptimizerKind k : {OptimizerKind::muonpp, OptimizerKind::muonpp_rescale, OptimizerKind::muon,
                          OptimizerKind::cascade}) {
    if (text == to_string(k)) return k;
  }
  throw InvalidInput("unknown optimizer '" + text + "' (expected muonpp, muonpp_rescale, muon or cascade)");
}

TrainResult train_run(const MLPConfig& config, const TrainOptions& options) {
  config.validate();
  validate_options(options);
  const int L = config.depth();
  const Teacher teacher(config);
  const Batch eval = teacher.draw(stream_key(config.seed, kEvalTag, 0), config.widths[0], options.eval_batch);

  TrainResult result;
  result.weights = mup_init(config);
  Weights& w = result.weights;

  std::vector<optim::MuonPPState> states;
  std::vector<linalg::Vector> warm_v1(static_cast<std::size_t>(L));
  for (const Matrix& m : w) states.push_back(optim::MuonPPState::init(m.rows(), m.cols(), options.mu));

  optim::StepOptions step_opts;
  step_opts.msign_mode = options.msign_mode;
  step_opts.ns_steps = options.ns_steps;
  step_opts.nesterov = options.nesterov;

  std::vector<Matrix> prev_h = forward(w, eval.x, config.activation);
  {
    TrainRecord r0;
    r0.step = 0;
    r0.loss = loss(prev_h.back(), eval.y);
    r0.batch_loss = kNaN;
    for (int l = 0; l < L; ++l) {
      LayerRecord lr;
      lr.spectral_norm_W = linalg::spectral_norm(w[static_cast<std::size_t>(l)]);
      lr.h_l2 = mean_column_norm(prev_h[static_cast<std::size_t>(l) + 1]);
      lr.gap = kNaN;
      lr.admissible_eta = kNaN;
      r0.per_layer.push_back(lr);
    }
    result.records.push_back(std::move(r0));
  }
  if (options.on_step) options.on_step(0, w);

  for (int t = 1; t <= config.steps; ++t) {
    const Batch batch = teacher.draw(stream_key(config.seed, kDataTag, static_cast<std::uint64_t>(t)),
                                     config.widths[0], config.batch_size);
    const std::vector<Matrix> acts = forward(w, batch.x, config.activation);
    TrainRecord rec;
    rec.step = t;
    rec.batch_loss = loss(acts.back(), batch.y);
    const std::vector<Matrix> grads = backward(w, acts, batch.y, config.activation);

    for (int l = 0; l < L; ++l) {
      const auto i = static_cast<std::size_t>(l);
      LayerRecord lr;
      lr.gap = kNaN;
      lr.admissible_eta = kNaN;
      Matrix next;
      switch (options.optimizer) {
        case OptimizerKind::muonpp:
        case OptimizerKind::muonpp_rescale: {
          optim::StepOptions so = step_opts;
          so.power.start_v1 = warm_v1[i];
          optim::StepResult sr = options.optimizer == OptimizerKind::muonpp
                                     ? optim::muonpp_step(states[i], w[i], grads[i], options.eta, so)
                                     : optim::muonpp_rescale_step(states[i], w[i], grads[i], options.eta, so);
          warm_v1[i] = sr.report.top.v1;
          lr.gap = sr.report.gap_before;
          lr.admissible_eta = sr.report.admissible_eta;
          lr.rescaled = sr.report.rescaled;
          lr.spectral_norm_W = sr.report.spectral_norm_after;
          states[i] = std::move(sr.state);
          next = std::move(sr.weight);
          break;
        }
        case OptimizerKind::muon: {
          optim::BaselineResult br =
              optim::muon_baseline_step(states[i], w[i], grads[i], options.eta, options.muon_match_scaling, step_opts);
          states[i] = std::move(br.state);
          next = std::move(br.weight);
          lr.spectral_norm_W = linalg::spectral_norm(next);
          break;
        }
        case OptimizerKind::cascade: {
          states[i].momentum = states[i].mu * states[i].momentum + grads[i];
          states[i].step += 1;
          optim::CascadeResult cr = optim::cascade_step(w[i], states[i].momentum, options.eta);
          next = std::move(cr.weight);
          lr.rescaled = true;
          lr.spectral_norm_W = linalg::spectral_norm(next);
          break;
        }
      }
      lr.update_spectral_norm = linalg::spectral_norm(next - w[i]);
      w[i] = std::move(next);
      rec.per_layer.push_back(lr);
    }

    std::vector<Matrix> h = forward(w, eval.x, config.activation);
    rec.loss = loss(h.back(), eval.y);
    for (int l = 0; l < L; ++l) {
      const auto i = static_cast<std::size_t>(l) + 1;
      rec.per_layer[i - 1].h_l2 = mean_column_norm(h[i]);
      rec.per_layer[i - 1].delta_h_l2 = mean_column_norm(h[i] - prev_h[i]);
    }
    prev_h = std::move(h);
    if (options.on_step) options.on_step(t, w);
    const double recorded = rec.loss;
    result.records.push_back(std::move(rec));
    if (!std::isfinite(recorded) || recorded > options.divergence_loss) {
      result.diverged = true;
      result.diagnostic = "diverged at step " + std::to_string(t) + ": eval loss " + fmt(recorded);
      break;
    }
  }
  return result;
}

std::string train_csv(const TrainResult& result) {
  std::ostringstream os;
  if (result.diverged) os << "# diagnostic: " << result.diagnostic << '\n';
  os << "step,layer,loss,batch_loss,spectral_norm_W,update_spectral_norm,h_l2,delta_h_l2,gap,admissible_eta,"
        "rescaled\n";
  for (const TrainRecord& r : result.records) {
    for (std::size_t l = 0; l < r.per_layer.size(); ++l) {
      const LayerRecord& lr = r.per_layer[l];
      os << r.step << ',' << l + 1 << ',' << fmt(r.loss) << ',' << fmt(r.batch_loss) << ',' << fmt(lr.spectral_norm_W)
         << ',' << fmt(lr.update_spectral_norm) << ',' << fmt(lr.h_l2) << ',' << fmt(lr.delta_h_l2) << ','
         << fmt(lr.gap) << ',' << fmt(lr.admissible_eta) << ',' << (lr.rescaled ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

MLPConfig scale_hidden(const MLPConfig& base, int multiplier) {
  if (multiplier <= 0) throw InvalidInput("width multiplier must be positive");
  MLPConfig c = base;
  for (std::size_t i = 1; i + 1 < c.widths.size(); ++i) c.widths[i] *= multiplier;
  return c;
}

CoordinateCheck coordinate_check(const MLPConfig& base, const std::vector<int>& multipliers,
                                 const TrainOptions& options, int from_step, double band) {
  base.validate();
  if (multipliers.empty()) throw InvalidInput("coordinate_check: no width multipliers");
  if (from_step < 1) throw InvalidInput("coordinate_check: from_step must be at least 1");
  if (!(band > 1.0)) throw InvalidInput("coordinate_check: band must exceed 1");

  CoordinateCheck out;
  out.from_step = from_step;
  out.band = band;
  const int L = base.depth();
  // stats[k][step][layer] for the two statistics
  std::vector<std::vector<std::vector<double>>> hs;
  std::vector<std::vector<std::vector<double>>> dhs;
  for (int k : multipliers) {
    const MLPConfig cfg = scale_hidden(base, k);
    const TrainResult run = train_run(cfg, options);
    out.diverged = out.diverged || run.diverged;
    auto& h = hs.emplace_back();
    auto& dh = dhs.emplace_back();
    for (const TrainRecord& r : run.records) {
      h.emplace_back();
      dh.emplace_back();
      for (int l = 0; l < L; ++l) {
        const Eigen::Index n = cfg.widths[static_cast<std::size_t>(l) + 1];
        const double root = std::sqrt(static_cast<double>(n));
        const LayerRecord& lr = r.per_layer[static_cast<std::size_t>(l)];
        CoordinateRow row{k, r.step, l + 1, n, lr.h_l2 / root, lr.delta_h_l2 / root};
        out.rows.push_back(row);
        h.back().push_back(row.h_normalized);
        dh.back().push_back(row.delta_h_normalized);
      }
    }
  }
  if (multipliers.size() < 2) return out;

  std::size_t steps = hs.front().size();
  for (const auto& h : hs) steps = std::min(steps, h.size());
  auto spread = [](const std::vector<double>& xs) {
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
    return *hi / *lo;
  };
  bool any = false;
  for (std::size_t s = static_cast<std::size_t>(from_step); s < steps; ++s) {
    for (int l = 0; l + 1 < L; ++l) {
      std::vector<double> a, b;
      for (std::size_t k = 0; k < hs.size(); ++k) {
        a.push_back(hs[k][s][static_cast<std::size_t>(l)]);
        b.push_back(dhs[k][s][static_cast<std::size_t>(l)]);
      }
      out.worst_h_ratio = std::max(out.worst_h_ratio, spread(a));
      out.worst_delta_h_ratio = std::max(out.worst_delta_h_ratio, spread(b));
      any = true;
    }
  }
  out.passed = any && !out.diverged && out.worst_h_ratio < band && out.worst_delta_h_ratio < band;
  return out;
}

std::string coordinate_csv(const CoordinateCheck& check) {
  std::ostringstream os;
  os << "# band: max/min across widths < " << fmt(check.band) << " for hidden layers at steps >= "
     << check.from_step << '\n';
  os << "# worst_h_ratio = " << fmt(check.worst_h_ratio) << '\n';
  os << "# worst_delta_h_ratio = " << fmt(check.worst_delta_h_ratio) << '\n';
  os << "# verdict: " << (check.passed ? (*check.passed ? "pass" : "fail") : "none (single width)") << '\n';
  os << "width_multiplier,step,layer,width,h_l2_normalized,delta_h_l2_normalized\n";
  for (const CoordinateRow& r : check.rows) {
    os << r.width_multiplier << ',' << r.step << ',' << r.layer << ',' << r.width << ',' << fmt(r.h_normalized) << ','
       << fmt(r.delta_h_normalized) << '\n';
  }
  return os.str();
}

SweepTable lr_sweep(const MLPConfig& base, const std::vector<int>& multipliers, const std::vector<double>& eta_grid,
                    const TrainOptions& options) {
  base.validate();
  if (multipliers.empty()) throw InvalidInput("lr_sweep: no width multipliers");
  if (eta_grid.empty()) throw InvalidInput("lr_sweep: empty eta grid");
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] > 0.0) || !std::isfinite(eta_grid[i])) throw InvalidInput("lr_sweep: eta values must be positive");
    if (i > 0 && !(eta_grid[i] > eta_grid[i - 1])) throw InvalidInput("lr_sweep: eta grid must be strictly increasing");
  }

  SweepTable table;
  std::vector<int> argmins;
  for (int k : multipliers) {
    const MLPConfig cfg = scale_hidden(base, k);
    const std::size_t first = table.rows.size();
    int best = -1;
    for (std::size_t e = 0; e < eta_grid.size(); ++e) {
      TrainOptions o = options;
      o.eta = eta_grid[e];
      const TrainResult run = train_run(cfg, o);
      SweepRow row;
      row.width_multiplier = k;
      row.eta = eta_grid[e];
      row.final_loss = run.diverged ? std::numeric_limits<double>::infinity() : run.records.back().loss;
      if (std::isfinite(row.final_loss) &&
          (best < 0 || row.final_loss < table.rows[first + static_cast<std::size_t>(best)].final_loss)) {
        best = static_cast<int>(e);
      }
      table.rows.push_back(row);
    }
    if (best >= 0) table.rows[first + static_cast<std::size_t>(best)].argmin = true;
    argmins.push_back(best);
  }
  for (std::size_t i = 1; i < argmins.size(); ++i) {
    if (argmins[i] >= 0 && argmins[i - 1] >= 0) {
      table.max_argmin_drift = std::max(table.max_argmin_drift, std::abs(argmins[i] - argmins[i - 1]));
    }
  }
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream os;
  os << "# max_argmin_drift_grid_steps = " << table.max_argmin_drift << '\n';
  os << "width_multiplier,eta,final_loss,argmin_flag\n";
  for (const SweepRow& r : table.rows) {
    os << r.width_multiplier << ',' << fmt(r.eta) << ',' << fmt(r.final_loss) << ',' << (r.argmin ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace muonpp::train
