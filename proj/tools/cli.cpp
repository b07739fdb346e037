#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "muonpp/correlation.hpp"
#include "muonpp/errors.hpp"
#include "muonpp/matrix_io.hpp"
#include "muonpp/rmt_lab.hpp"
#include "muonpp/seeding.hpp"
#include "muonpp/spectral_update.hpp"
#include "muonpp/train.hpp"

namespace muonpp::cli {

namespace fs = std::filesystem;
using linalg::Matrix;

namespace {

// ---------------------------------------------------------------------------
// Schemas

KeySpec req(std::string key, ValueType t, std::string help) {
  return {std::move(key), t, Presence::required, "", std::move(help)};
}
KeySpec def(std::string key, ValueType t, std::string value, std::string help) {
  return {std::move(key), t, Presence::defaulted, std::move(value), std::move(help)};
}
KeySpec opt(std::string key, ValueType t, std::string help) {
  return {std::move(key), t, Presence::optional, "", std::move(help)};
}

std::vector<KeySpec> with_common(std::vector<KeySpec> keys) {
  keys.push_back(def("seed", ValueType::seed, "0", "master seed"));
  keys.push_back(def("out", ValueType::path, ".", "output directory"));
  return keys;
}

std::vector<KeySpec> training_keys(std::string widths, std::string steps, std::string optimizer) {
  return {
      def("widths", ValueType::int_list, std::move(widths), "layer widths n0,n1,...,nL"),
      def("activation", ValueType::text, "tanh", "relu | tanh | identity (hidden layers)"),
      def("batch-size", ValueType::count, "32", "training batch size"),
      def("steps", ValueType::count, std::move(steps), "optimizer steps"),
      def("optimizer", ValueType::text, std::move(optimizer), "muonpp | muonpp_rescale | muon | cascade"),
      def("mu", ValueType::real, "0.9", "momentum coefficient in [0, 1)"),
      def("msign", ValueType::text, "iterative", "exact | iterative"),
      def("ns-steps", ValueType::count, "30", "Newton-Schulz steps for iterative msign"),
      def("nesterov", ValueType::boolean, "false", "use mu * M + G as the msign input"),
      def("eval-batch", ValueType::count, "256", "held-out batch for loss and h statistics"),
  };
}

std::vector<CommandSpec> build_commands() {
  std::vector<CommandSpec> c;
  c.push_back({"step", "one optimizer step on MAT1 fixtures",
               with_common({
                   req("weight", ValueType::path, "weight matrix (MAT1)"),
                   req("grad", ValueType::path, "gradient matrix (MAT1)"),
                   opt("momentum", ValueType::path, "incoming momentum (MAT1); zero if absent"),
                   req("eta", ValueType::real, "step size"),
                   def("mu", ValueType::real, "0", "momentum coefficient in [0, 1)"),
                   def("variant", ValueType::text, "muonpp", "muonpp | muonpp_rescale"),
                   def("msign", ValueType::text, "exact", "exact | iterative"),
                   def("ns-steps", ValueType::count, "30", "Newton-Schulz steps for iterative msign"),
               })});
  {
    auto keys = training_keys("64,128,128,32", "200", "muonpp_rescale");
    keys.push_back(def("eta", ValueType::real, "0.05", "step size"));
    c.push_back({"train", "train the teacher-student MLP and log per-layer statistics", with_common(keys)});
  }
  {
    auto keys = training_keys("16,32,32,8", "50", "muonpp_rescale");
    keys.push_back(def("multipliers", ValueType::int_list, "1,2,4", "hidden width multipliers"));
    keys.push_back(def("eta-grid", ValueType::real_list, "0.00625,0.0125,0.025,0.05,0.1,0.2,0.4",
                       "positive, strictly increasing step sizes"));
    c.push_back({"sweep", "final loss per (width, eta) and the argmin eta per width", with_common(keys)});
  }
  {
    auto keys = training_keys("16,32,32,8", "6", "muonpp");
    keys.push_back(def("eta", ValueType::real, "0.05", "step size"));
    keys.push_back(def("multipliers", ValueType::int_list, "1,2,4,8", "hidden width multipliers"));
    keys.push_back(def("from-step", ValueType::count, "3", "first step included in the verdict"));
    keys.push_back(def("band", ValueType::real, "2", "allowed max/min ratio across widths"));
    c.push_back({"coordcheck", "normalized ||h|| and ||dh|| across widths", with_common(keys)});
  }
  c.push_back({"rmt-gap", "sigma1 - sigma2 of iid Gaussian matrices across n",
               with_common({
                   def("ns", ValueType::int_list, "128,512,2048", "ascending sizes, each >= 32"),
                   def("trials", ValueType::count, "30", "draws per n"),
               })});
  c.push_back({"rmt-preserve", "spectral norm preservation under admissible steps",
               with_common({
                   def("dims", ValueType::dims_list, "8x8,24x16,64x64", "shapes m x n, each >= 4 x 4"),
                   def("trials", ValueType::count, "500", "total instances, round-robin over dims"),
                   def("eta-factor", ValueType::real, "0.9", "eta as a multiple of the admissible bound"),
                   def("tolerance", ValueType::real, "1e-8", "relative tolerance on the norm"),
                   def("counterexample", ValueType::boolean, "true", "append the fixed 2 x 2 counterexample"),
               })});
  c.push_back({"rmt-ratio", "norms of correlated weights against the regime predictions",
               with_common({
                   def("rho-law", ValueType::text, "inv_n2", "const | inv_n | inv_sqrt_n | inv_n2"),
                   def("rho-coef", ValueType::real, "1", "rho = rho-coef * law(n)"),
                   def("sigma-law", ValueType::text, "fixed", "fixed | inv_n | key_diff"),
                   def("sigma", ValueType::real, "1", "entry standard deviation for sigma-law fixed"),
                   def("c", ValueType::real, "1", "aspect ratio m / n in (0, 1]"),
                   def("ns", ValueType::int_list, "256,1024,2048", "ascending sizes"),
                   def("trials", ValueType::count, "30", "draws per n"),
               })});
  c.push_back({"rmt-mom", "method-of-moments correlation estimate against the conditional oracle",
               with_common({
                   def("m", ValueType::count, "256", "rows"),
                   def("n", ValueType::count, "256", "columns"),
                   def("sigma", ValueType::real, "1", "entry standard deviation"),
                   def("rhos", ValueType::real_list, "0.05", "correlations, one spec each"),
                   def("trials", ValueType::count, "50", "draws per spec"),
                   def("tolerance", ValueType::real, "0.01", "bound on the mean absolute deviation"),
               })});
  c.push_back({"corr-estimate", "estimate rho of a weight matrix, optionally applying the rescale trigger",
               with_common({
                   req("weight", ValueType::path, "weight matrix (MAT1)"),
                   def("rescale", ValueType::boolean, "false", "apply the first-crossing rescale trigger"),
                   opt("C", ValueType::real, "trigger constant (required with rescale)"),
                   opt("rho-prev", ValueType::real, "previous rho estimate (required with rescale)"),
                   def("already-fired", ValueType::boolean, "false", "the trigger fired at an earlier checkpoint"),
               })});
  c.push_back({"corr-sample", "draw one correlated weight matrix",
               with_common({
                   def("m", ValueType::count, "256", "rows (m <= n)"),
                   def("n", ValueType::count, "256", "columns"),
                   def("sigma", ValueType::real, "1", "entry standard deviation"),
                   req("rho", ValueType::real, "pairwise correlation in [-1/(mn-1), 1]"),
               })});
  c.push_back({"budget", "steps and tokens before updates dominate the initialization",
               with_common({
                   req("eta", ValueType::real, "peak learning rate"),
                   req("n", ValueType::count, "width"),
                   req("init-range", ValueType::real, "initializer standard deviation"),
                   req("base-width", ValueType::count, "base width of the parametrization"),
                   def("batch-size", ValueType::count, "1", "tokens per step"),
               })});
  return c;
}

// ---------------------------------------------------------------------------
// Value parsing

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw UsageError("invalid value '" + value + "' for key '" + key + "': expected " + expected);
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  if (!parse_number(v, x)) bad_value(key, v, "an integer");
  return x;
}

double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  if (!parse_number(v, x) || !std::isfinite(x)) bad_value(key, v, "a finite real number");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

void check_value(const KeySpec& spec, const std::string& v) {
  switch (spec.type) {
    case ValueType::integer:
      to_int(spec.key, v);
      break;
    case ValueType::count:
      if (to_int(spec.key, v) <= 0) bad_value(spec.key, v, "a positive integer");
      break;
    case ValueType::seed: {
      std::uint64_t x = 0;
      if (!parse_number(v, x)) bad_value(spec.key, v, "a non-negative 64-bit integer");
      break;
    }
    case ValueType::real:
      to_real(spec.key, v);
      break;
    case ValueType::boolean:
      to_bool(spec.key, v);
      break;
    case ValueType::int_list:
      if (v.empty()) bad_value(spec.key, v, "a comma-separated list of integers");
      for (const auto& item : split(v, ',')) to_int(spec.key, item);
      break;
    case ValueType::real_list:
      if (v.empty()) bad_value(spec.key, v, "a comma-separated list of reals");
      for (const auto& item : split(v, ',')) to_real(spec.key, item);
      break;
    case ValueType::dims_list:
      if (v.empty()) bad_value(spec.key, v, "a comma-separated list of MxN shapes");
      for (const auto& item : split(v, ',')) {
        const auto parts = split(item, 'x');
        if (parts.size() != 2) bad_value(spec.key, v, "a comma-separated list of MxN shapes");
        to_int(spec.key, parts[0]);
        to_int(spec.key, parts[1]);
      }
      break;
    case ValueType::text:
    case ValueType::path:
      if (v.empty()) bad_value(spec.key, v, "a non-empty string");
      break;
  }
}

// Checks that need more than one key or domain knowledge.
void check_semantics(const RunConfig& rc) {
  auto wrap = [&](auto&& fn) {
    try {
      fn();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
  };
  const std::string& cmd = rc.command;
  if (rc.has("optimizer")) wrap([&] { train::parse_optimizer(rc.text("optimizer")); });
  if (rc.has("activation")) wrap([&] { train::parse_activation(rc.text("activation")); });
  if (rc.has("msign")) {
    const std::string& m = rc.text("msign");
    if (m != "exact" && m != "iterative") bad_value("msign", m, "exact or iterative");
  }
  if (rc.has("variant")) {
    const std::string& v = rc.text("variant");
    if (v != "muonpp" && v != "muonpp_rescale") bad_value("variant", v, "muonpp or muonpp_rescale");
  }
  if (rc.has("rho-law")) wrap([&] { rmt::parse_rho_law(rc.text("rho-law")); });
  if (rc.has("sigma-law")) wrap([&] { rmt::parse_sigma_law(rc.text("sigma-law")); });
  if (rc.has("mu")) {
    const double mu = rc.real("mu");
    if (!(mu >= 0.0 && mu < 1.0)) bad_value("mu", rc.text("mu"), "a value in [0, 1)");
  }
  if (cmd == "corr-sample") {
    wrap([&] {
      corr::CorrelatedWeightSpec spec{rc.integer("m"), rc.integer("n"), rc.real("sigma"), rc.real("rho")};
      spec.validate();
    });
  }
  if (cmd == "corr-estimate" && rc.boolean("rescale")) {
    for (const char* key : {"C", "rho-prev"}) {
      if (!rc.has(key)) throw UsageError(std::string("missing required key '") + key + "' (needed when rescale = true)");
    }
  }
}

// ---------------------------------------------------------------------------
// Output

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  fs::path write(const std::string& name, const std::string& content) const {
    const fs::path p = dir_ / name;
    io::write_file_atomic(p, content);
    return p;
  }

 private:
  fs::path dir_;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const OutputDir& out, const RunConfig& rc) {
  std::ostringstream os;
  os << "command = " << rc.command << '\n';
  if (rc.config_file) os << "config_file = " << rc.config_file->string() << '\n';
  for (const auto& [k, v] : rc.values) os << k << " = " << v << '\n';
  os << "seed_rule = " << stream_key_rule() << '\n';
  os << "created = " << timestamp() << '\n';
  out.write("manifest.txt", os.str());
}

std::string fmt(double x) { return io::format_double(x); }

linalg::MsignMode msign_mode(const RunConfig& rc) {
  return rc.text("msign") == "exact" ? linalg::MsignMode::exact : linalg::MsignMode::iterative;
}

train::MLPConfig mlp_config(const RunConfig& rc) {
  train::MLPConfig c;
  for (std::int64_t w : rc.int_list("widths")) c.widths.push_back(static_cast<Eigen::Index>(w));
  c.activation = train::parse_activation(rc.text("activation"));
  c.batch_size = static_cast<int>(rc.integer("batch-size"));
  c.steps = static_cast<int>(rc.integer("steps"));
  c.seed = rc.seed;
  return c;
}

train::TrainOptions train_options(const RunConfig& rc) {
  train::TrainOptions o;
  o.optimizer = train::parse_optimizer(rc.text("optimizer"));
  if (rc.has("eta")) o.eta = rc.real("eta");
  o.mu = rc.real("mu");
  o.msign_mode = msign_mode(rc);
  o.ns_steps = static_cast<int>(rc.integer("ns-steps"));
  o.nesterov = rc.boolean("nesterov");
  o.eval_batch = static_cast<int>(rc.integer("eval-batch"));
  return o;
}

std::vector<int> multipliers(const RunConfig& rc) {
  std::vector<int> out;
  for (std::int64_t k : rc.int_list("multipliers")) {
    if (k <= 0) bad_value("multipliers", rc.text("multipliers"), "positive integers");
    out.push_back(static_cast<int>(k));
  }
  return out;
}

int verdict_code(Verdict v) { return v == Verdict::pass ? 0 : 1; }

int emit_report(const OutputDir& out, const ExperimentReport& r, std::ostream& os) {
  out.write(r.name + ".csv", r.to_csv());
  out.write(r.name + ".verdict.txt", r.verdict_line() + "\n");
  os << r.name << ": " << r.verdict_line();
  if (!r.note.empty()) os << " (" << r.note << ")";
  os << " wall_time=" << fmt(r.wall_time) << "s\n";
  return verdict_code(r.verdict);
}

std::vector<Eigen::Index> index_list(const RunConfig& rc, const std::string& key) {
  std::vector<Eigen::Index> out;
  for (std::int64_t x : rc.int_list(key)) out.push_back(static_cast<Eigen::Index>(x));
  return out;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_step(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  const Matrix w = io::read_mat1_file(rc.text("weight"));
  const Matrix g = io::read_mat1_file(rc.text("grad"));
  optim::MuonPPState state = optim::MuonPPState::init(w.rows(), w.cols(), rc.real("mu"));
  if (rc.has("momentum")) state.momentum = io::read_mat1_file(rc.text("momentum"));
  optim::StepOptions so;
  so.msign_mode = msign_mode(rc);
  so.ns_steps = static_cast<int>(rc.integer("ns-steps"));
  const double eta = rc.real("eta");
  const optim::StepResult r = rc.text("variant") == "muonpp" ? optim::muonpp_step(state, w, g, eta, so)
                                                             : optim::muonpp_rescale_step(state, w, g, eta, so);
  out.write("weight.mat1", io::to_mat1(r.weight));
  out.write("delta.mat1", io::to_mat1(r.report.delta));
  out.write("momentum.mat1", io::to_mat1(r.state.momentum));
  out.write("step.csv", optim::step_report_csv_header() + "\n" + optim::step_report_csv_row(r.report) + "\n");
  os << "S=" << fmt(r.report.S) << " admissible_eta=" << fmt(r.report.admissible_eta)
     << " spectral_norm_after=" << fmt(r.report.spectral_norm_after) << " rescaled=" << (r.report.rescaled ? 1 : 0)
     << '\n';
  return 0;
}

int cmd_train(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  const train::TrainResult r = train::train_run(mlp_config(rc), train_options(rc));
  out.write("train.csv", train::train_csv(r));
  os << "initial_loss=" << fmt(r.records.front().loss) << " final_loss=" << fmt(r.records.back().loss)
     << " steps=" << r.records.back().step;
  if (r.diverged) os << " diverged: " << r.diagnostic;
  os << '\n';
  return r.diverged ? 1 : 0;
}

int cmd_sweep(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  const train::SweepTable t = train::lr_sweep(mlp_config(rc), multipliers(rc), rc.real_list("eta-grid"),
                                              train_options(rc));
  out.write("sweep.csv", train::sweep_csv(t));
  for (const auto& row : t.rows) {
    if (row.argmin) os << "width_multiplier=" << row.width_multiplier << " argmin_eta=" << fmt(row.eta) << '\n';
  }
  os << "max_argmin_drift=" << t.max_argmin_drift << " (reported, not gated)\n";
  return 0;
}

int cmd_coordcheck(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  const train::CoordinateCheck c =
      train::coordinate_check(mlp_config(rc), multipliers(rc), train_options(rc),
                              static_cast<int>(rc.integer("from-step")), rc.real("band"));
  out.write("coordcheck.csv", train::coordinate_csv(c));
  os << "worst_h_ratio=" << fmt(c.worst_h_ratio) << " worst_delta_h_ratio=" << fmt(c.worst_delta_h_ratio)
     << " verdict=" << (c.passed ? (*c.passed ? "pass" : "fail") : "none") << '\n';
  return c.passed && !*c.passed ? 1 : 0;
}

int cmd_rmt_gap(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  rmt::GapOptions o;
  o.ns = index_list(rc, "ns");
  o.trials = static_cast<int>(rc.integer("trials"));
  o.seed = rc.seed;
  return emit_report(out, rmt::run_gap_experiment(o), os);
}

int cmd_rmt_preserve(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  rmt::PreservationOptions o;
  for (const auto& [m, n] : rc.dims_list("dims")) o.dims.emplace_back(m, n);
  o.trials = static_cast<int>(rc.integer("trials"));
  o.seed = rc.seed;
  o.eta_factor = rc.real("eta-factor");
  o.tolerance = rc.real("tolerance");
  o.include_counterexample = rc.boolean("counterexample");
  return emit_report(out, rmt::run_preservation_experiment(o), os);
}

int cmd_rmt_ratio(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  rmt::NormRatioOptions o;
  const double c = rc.real("c");
  if (!(c > 0.0 && c <= 1.0)) bad_value("c", rc.text("c"), "a value in (0, 1]");
  // Only the ratio m / n of the template matters.
  o.spec_template = {static_cast<Eigen::Index>(std::llround(c * 1e6)), 1000000, rc.real("sigma"), rc.real("rho-coef")};
  o.rho_law = rmt::parse_rho_law(rc.text("rho-law"));
  o.sigma_law = rmt::parse_sigma_law(rc.text("sigma-law"));
  o.ns = index_list(rc, "ns");
  o.trials = static_cast<int>(rc.integer("trials"));
  o.seed = rc.seed;
  return emit_report(out, rmt::run_norm_ratio_experiment(o), os);
}

int cmd_rmt_mom(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  std::vector<corr::CorrelatedWeightSpec> specs;
  for (double rho : rc.real_list("rhos")) {
    specs.push_back({rc.integer("m"), rc.integer("n"), rc.real("sigma"), rho});
  }
  return emit_report(out,
                     rmt::run_mom_experiment(specs, static_cast<int>(rc.integer("trials")), rc.seed,
                                             rc.real("tolerance")),
                     os);
}

int cmd_corr_estimate(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  const Matrix w = io::read_mat1_file(rc.text("weight"));
  const double rho_hat = corr::mom_rho(w);
  const double spectral = linalg::spectral_norm(w);
  const double srank = corr::stable_rank(w, spectral);
  std::ostringstream csv;
  csv << "m,n,rho_hat,frob,spectral,srank";
  std::ostringstream row;
  row << w.rows() << ',' << w.cols() << ',' << fmt(rho_hat) << ',' << fmt(w.norm()) << ',' << fmt(spectral) << ','
      << fmt(srank);
  os << "rho_hat=" << fmt(rho_hat) << " srank=" << fmt(srank);
  if (rc.boolean("rescale")) {
    const corr::TriggerOutcome t =
        corr::rescale_on_trigger(w, rc.real("rho-prev"), rho_hat, rc.real("C"), rc.boolean("already-fired"));
    csv << ",threshold,fired,factor";
    row << ',' << fmt(t.threshold) << ',' << (t.fired ? 1 : 0) << ',' << fmt(t.factor);
    if (t.fired && !rc.boolean("already-fired")) out.write("rescaled.mat1", io::to_mat1(t.weight));
    os << " threshold=" << fmt(t.threshold) << " fired=" << (t.fired ? 1 : 0) << " factor=" << fmt(t.factor);
  }
  os << '\n';
  out.write("corr-estimate.csv", csv.str() + "\n" + row.str() + "\n");
  return 0;
}

int cmd_corr_sample(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  corr::CorrelatedWeightSpec spec{rc.integer("m"), rc.integer("n"), rc.real("sigma"), rc.real("rho")};
  const std::uint64_t key = stream_key(rc.seed, static_cast<std::uint64_t>(spec.n), 0);
  const corr::CorrelatedDraw d = corr::sample_correlated(spec, key);
  const double spectral = linalg::spectral_norm(d.weight);
  const double frob = d.weight.norm();
  const corr::SpectralPrediction p = corr::predict_spectral(spec, d.z);
  const corr::FrobeniusPrediction f = corr::predict_frobenius(spec);
  const double rho_hat = frob > 0.0 ? corr::mom_rho(d.weight) : 0.0;
  const double srank = spectral > 0.0 ? corr::stable_rank(d.weight, spectral) : 0.0;
  std::ostringstream csv;
  csv << "m,n,sigma,rho,c,seed,z,frob,spectral,srank,rho_hat,regime,predicted_norm,ratio,frob_ratio\n"
      << spec.m << ',' << spec.n << ',' << fmt(spec.sigma_n) << ',' << fmt(spec.rho_n) << ',' << fmt(spec.c()) << ','
      << key << ',' << fmt(d.z) << ',' << fmt(frob) << ',' << fmt(spectral) << ',' << fmt(srank) << ','
      << fmt(rho_hat) << ',' << corr::to_string(p.regime) << ',' << fmt(p.predicted_norm) << ','
      << fmt(p.predicted_norm > 0.0 ? spectral / p.predicted_norm : std::nan("")) << ','
      << fmt(f.value > 0.0 ? frob / f.value : std::nan("")) << '\n';
  out.write("sample.mat1", io::to_mat1(d.weight));
  out.write("corr-sample.csv", csv.str());
  os << "regime=" << corr::to_string(p.regime) << " z=" << fmt(d.z) << " spectral=" << fmt(spectral)
     << " predicted=" << fmt(p.predicted_norm) << '\n';
  return 0;
}

int cmd_budget(const RunConfig& rc, const OutputDir& out, std::ostream& os) {
  const optim::TokenBudget b = optim::token_budget_threshold(rc.real("eta"), rc.integer("n"), rc.real("init-range"),
                                                             rc.integer("base-width"), rc.integer("batch-size"));
  std::ostringstream csv;
  csv << "eta,n,init_range,base_width,batch_size,T_threshold,tokens\n"
      << rc.text("eta") << ',' << rc.text("n") << ',' << rc.text("init-range") << ',' << rc.text("base-width") << ','
      << rc.text("batch-size") << ',' << fmt(b.T_threshold) << ',' << fmt(b.token_threshold) << '\n';
  out.write("budget.csv", csv.str());
  os << "T_threshold=" << fmt(b.T_threshold) << " tokens=" << fmt(b.token_threshold) << '\n';
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> all = build_commands();
  return all;
}

const CommandSpec* find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw UsageError("missing required key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::integer(const std::string& key) const { return to_int(key, text(key)); }
double RunConfig::real(const std::string& key) const { return to_real(key, text(key)); }
bool RunConfig::boolean(const std::string& key) const { return to_bool(key, text(key)); }

std::vector<std::int64_t> RunConfig::int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split(text(key), ',')) out.push_back(to_int(key, item));
  return out;
}

std::vector<double> RunConfig::real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(text(key), ',')) out.push_back(to_real(key, item));
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> RunConfig::dims_list(const std::string& key) const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (const auto& item : split(text(key), ',')) {
    const auto parts = split(item, 'x');
    if (parts.size() != 2) bad_value(key, text(key), "a comma-separated list of MxN shapes");
    out.emplace_back(to_int(key, parts[0]), to_int(key, parts[1]));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args, const std::optional<fs::path>& file) {
  if (args.empty()) throw UsageError("missing command");
  const CommandSpec* cmd = find_command(args[0]);
  if (!cmd) throw UsageError("unknown command '" + args[0] + "'");

  RunConfig rc;
  rc.command = cmd->name;
  rc.config_file = file;
  std::map<std::string, std::string> flags;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() == 2) throw UsageError("expected --key, got '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (i + 1 >= args.size()) throw UsageError("missing value for key '" + key + "'");
      value = args[++i];
    }
    if (key == "config") {
      rc.config_file = value;
      continue;
    }
    flags[key] = value;
  }

  std::map<std::string, std::string> merged;
  if (rc.config_file) merged = read_config_file(*rc.config_file);
  for (const auto& [k, v] : flags) merged[k] = v;

  for (const auto& [k, v] : merged) {
    const auto it = std::find_if(cmd->keys.begin(), cmd->keys.end(), [&](const KeySpec& s) { return s.key == k; });
    if (it == cmd->keys.end()) throw UsageError("unknown key '" + k + "' for command '" + cmd->name + "'");
    check_value(*it, v);
    rc.values[k] = v;
  }
  for (const KeySpec& s : cmd->keys) {
    if (rc.values.count(s.key)) continue;
    if (s.presence == Presence::required) throw UsageError("missing required key '" + s.key + "'");
    if (s.presence == Presence::defaulted) rc.values[s.key] = s.default_value;
  }
  std::uint64_t seed = 0;
  parse_number(rc.text("seed"), seed);
  rc.seed = seed;
  rc.output_dir = rc.text("out");
  check_semantics(rc);
  return rc;
}

std::string usage(const CommandSpec& c) {
  std::ostringstream os;
  os << "usage: muonpp " << c.name << " [--key value]... [--config FILE]\n  " << c.summary << "\n";
  for (const KeySpec& k : c.keys) {
    os << "  --" << std::left << std::setw(16) << k.key << k.help;
    if (k.presence == Presence::required) os << " (required)";
    if (k.presence == Presence::defaulted) os << " [" << k.default_value << "]";
    os << '\n';
  }
  return os.str();
}

std::string usage() {
  std::ostringstream os;
  os << "usage: muonpp <command> [--key value]... [--config FILE]\n\ncommands:\n";
  for (const auto& c : commands()) os << "  " << std::left << std::setw(14) << c.name << c.summary << '\n';
  os << "\nflags override values from the config file (flat 'key = value' lines).\n"
        "run 'muonpp <command> --help' for the keys of one command.\n"
        "exit codes: 0 success or pass, 1 fail or inconclusive verdict, 2 usage or input error.\n";
  return os.str();
}

int dispatch(const RunConfig& rc, std::ostream& os) {
  const OutputDir out(rc.output_dir);
  write_manifest(out, rc);
  const std::string& c = rc.command;
  if (c == "step") return cmd_step(rc, out, os);
  if (c == "train") return cmd_train(rc, out, os);
  if (c == "sweep") return cmd_sweep(rc, out, os);
  if (c == "coordcheck") return cmd_coordcheck(rc, out, os);
  if (c == "rmt-gap") return cmd_rmt_gap(rc, out, os);
  if (c == "rmt-preserve") return cmd_rmt_preserve(rc, out, os);
  if (c == "rmt-ratio") return cmd_rmt_ratio(rc, out, os);
  if (c == "rmt-mom") return cmd_rmt_mom(rc, out, os);
  if (c == "corr-estimate") return cmd_corr_estimate(rc, out, os);
  if (c == "corr-sample") return cmd_corr_sample(rc, out, os);
  if (c == "budget") return cmd_budget(rc, out, os);
  throw UsageError("unknown command '" + c + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? 2 : 0;
  }
  if (const CommandSpec* cmd = find_command(args[0])) {
    if (std::find(args.begin() + 1, args.end(), "--help") != args.end()) {
      out << usage(*cmd);
      return 0;
    }
  }
  try {
    const RunConfig rc = parse_config(args);
    return dispatch(rc, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    if (const CommandSpec* cmd = find_command(args[0])) {
      err << usage(*cmd);
    } else {
      err << usage();
    }
    return 2;
  } catch (const InvalidInput& e) {
    err << "error: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateInput& e) {
    err << "error: degenerate input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace muonpp::cli
