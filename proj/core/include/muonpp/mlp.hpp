#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "muonpp/linalg.hpp"

namespace muonpp::train {

using linalg::Matrix;

enum class Activation { relu, tanh, identity };
enum class Loss { squared_error };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

/// Biasless MLP n_0 -> n_1 -> ... -> n_L. Hidden layers use `activation`, the
/// last layer is linear.
struct MLPConfig {
  std::vector<Eigen::Index> widths;
  Activation activation = Activation::tanh;
  Loss loss = Loss::squared_error;
  int batch_size = 32;
  int steps = 100;
  std::uint64_t seed = 0;

  int depth() const { return static_cast<int>(widths.size()) - 1; }
  /// L >= 2, all widths >= 2, batch_size and steps positive.
  void validate() const;
};

/// W^l is n_l x n_{l-1}; index 0 holds W^1.
using Weights = std::vector<Matrix>;

/// Gaussian entries, then each layer rescaled to ||W^l|| = sqrt(n_l / n_{l-1}).
/// Layer l draws from stream_key(seed, tag, l).
Weights mup_init(const MLPConfig& config);
/// The pre-rescale Gaussian draw of layer `layer` (0-based), for inspection.
Matrix mup_init_raw(const MLPConfig& config, int layer);

/// Inputs are columns of `x`. Returns h_0 = x, h_1, ..., h_L.
std::vector<Matrix> forward(const Weights& weights, const Matrix& x, Activation activation);

/// Mean over the batch of 0.5 * ||h_L - y||^2.
double loss(const Matrix& output, const Matrix& target);

/// Gradients of `loss` with respect to each W^l, from the activations of a
/// matching forward call.
std::vector<Matrix> backward(const Weights& weights, const std::vector<Matrix>& activations, const Matrix& target,
                             Activation activation);

}  // namespace muonpp::train
