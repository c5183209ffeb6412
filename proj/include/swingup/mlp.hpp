#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "swingup/rng.hpp"

namespace swingup {

enum class Activation { ReLU, Tanh };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

/// Dense feed-forward layout: input -> hidden... -> output. Hidden layers use
/// `activation`, the output layer is linear.
struct MlpArchitecture {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::ReLU;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }

  /// Exact number of parameters: per layer, a row-major weight block followed
  /// by the bias vector.
  std::size_t param_count() const;
  /// Offset of layer `layer`'s weight block within the flat vector.
  std::size_t layer_offset(std::size_t layer) const;

  void validate() const;
  bool operator==(const MlpArchitecture&) const = default;
};

using FlatParams = std::vector<double>;

/// PyTorch-style U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation of weights and biases.
FlatParams init_params(const MlpArchitecture& arch, Rng& rng);

/// Single-sample forward pass.
std::vector<double> forward(const MlpArchitecture& arch, std::span<const double> params,
                            std::span<const double> input);

struct Gradients {
  std::vector<double> params;
  std::vector<double> input;
};

/// Gradient of upstream^T * forward(input) with respect to params and input.
Gradients backward(const MlpArchitecture& arch, std::span<const double> params,
                   std::span<const double> input, std::span<const double> upstream);

/// Activations kept from a batched forward pass; samples are columns.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // [0] is the input, back() the output
};

/// Batched forward pass. When `cache` is given, intermediate activations are
/// stored for a following backward_batch call.
Eigen::MatrixXd forward_batch(const MlpArchitecture& arch, std::span<const double> params,
                              const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr);

/// Accumulates d(sum upstream . output)/d(params) into `param_grad`; writes the
/// input gradient when `input_grad` is non-null.
void backward_batch(const MlpArchitecture& arch, std::span<const double> params,
                    const ForwardCache& cache, const Eigen::MatrixXd& upstream,
                    std::span<double> param_grad, Eigen::MatrixXd* input_grad = nullptr);

}  // namespace swingup
