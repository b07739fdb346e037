#include "muonpp/mlp.hpp"

#include <cmath>

#include "muonpp/errors.hpp"
#include "muonpp/seeding.hpp"

namespace muonpp::train {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;  // "init"

void apply_activation(Matrix& h, Activation a) {
  switch (a) {
    case Activation::relu:
      h = h.cwiseMax(0.0);
      break;
    case Activation::tanh:
      h = h.array().tanh().matrix();
      break;
    case Activation::identity:
      break;
  }
}

// f'(pre) written in terms of the post-activation value h = f(pre).
Matrix activation_derivative(const Matrix& h, Activation a) {
  switch (a) {
    case Activation::relu:
      return (h.array() > 0.0).cast<double>().matrix();
    case Activation::tanh:
      return (1.0 - h.array().square()).matrix();
    case Activation::identity:
      break;
  }
  return Matrix::Ones(h.rows(), h.cols());
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& text) {
  for (Activation a : {Activation::relu, Activation::tanh, Activation::identity}) {
    if (text == to_string(a)) return a;
  }
  throw InvalidInput("unknown activation '" + text + "' (expected relu, tanh or identity)");
}

void MLPConfig::validate() const {
  if (widths.size() < 3) throw InvalidInput("MLPConfig: need at least two layers (three widths)");
  for (Eigen::Index w : widths) {
    if (w < 2) throw InvalidInput("MLPConfig: every width must be at least 2");
  }
  if (batch_size <= 0) throw InvalidInput("MLPConfig: batch_size must be positive");
  if (steps <= 0) throw InvalidInput("MLPConfig: steps must be positive");
}

Matrix mup_init_raw(const MLPConfig& config, int layer) {
  config.validate();
  if (layer < 0 || layer >= config.depth()) throw InvalidInput("mup_init_raw: layer out of range");
  Rng rng = make_rng(stream_key(config.seed, kInitTag, static_cast<std::uint64_t>(layer)));
  const auto l = static_cast<std::size_t>(layer);
  return gaussian_matrix(config.widths[l + 1], config.widths[l], rng);
}

Weights mup_init(const MLPConfig& config) {
  config.validate();
  Weights w;
  for (int l = 0; l < config.depth(); ++l) {
    Matrix raw = mup_init_raw(config, l);
    const auto i = static_cast<std::size_t>(l);
    const double S = std::sqrt(static_cast<double>(config.widths[i + 1]) / static_cast<double>(config.widths[i]));
    const double norm = linalg::spectral_norm(raw);
    if (norm == 0.0) throw DegenerateInput("mup_init: zero draw");
    raw *= S / norm;
    w.push_back(std::move(raw));
  }
  return w;
}

std::vector<Matrix> forward(const Weights& weights, const Matrix& x, Activation activation) {
  if (weights.empty()) throw InvalidInput("forward: no layers");
  if (x.rows() != weights.front().cols()) {
    throw InvalidInput("forward: input dimension " + std::to_string(x.rows()) + " does not match n_0 = " +
                       std::to_string(weights.front().cols()));
  }
  std::vector<Matrix> h;
  h.reserve(weights.size() + 1);
  h.push_back(x);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].cols() != h.back().rows()) throw InvalidInput("forward: consecutive weight shapes do not chain");
    Matrix next = weights[l] * h.back();
    if (l + 1 < weights.size()) apply_activation(next, activation);
    h.push_back(std::move(next));
  }
  return h;
}

double loss(const Matrix& output, const Matrix& target) {
  linalg::require_same_shape(output, target, "loss output/target");
  return 0.5 * (output - target).squaredNorm() / static_cast<double>(output.cols());
}

std::vector<Matrix> backward(const Weights& weights, const std::vector<Matrix>& activations, const Matrix& target,
                             Activation activation) {
  const std::size_t L = weights.size();
  if (activations.size() != L + 1) throw InvalidInput("backward: activations do not match the number of layers");
  for (std::size_t l = 0; l < L; ++l) {
    if (activations[l].rows() != weights[l].cols() || activations[l + 1].rows() != weights[l].rows() ||
        activations[l].cols() != activations[0].cols() || activations[l + 1].cols() != activations[0].cols()) {
      throw InvalidInput("backward: stale activations (shape mismatch at layer " + std::to_string(l + 1) + ")");
    }
  }
  linalg::require_same_shape(activations[L], target, "backward output/target");

  std::vector<Matrix> grads(L);
  Matrix delta = (activations[L] - target) / static_cast<double>(target.cols());
  for (std::size_t l = L; l-- > 0;) {
    grads[l].noalias() = delta * activations[l].transpose();
    if (l == 0) break;
    Matrix back = weights[l].transpose() * delta;
    delta = back.cwiseProduct(activation_derivative(activations[l], activation));
  }
  return grads;
}

}  // namespace muonpp::train
