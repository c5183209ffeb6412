#include "swingup/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace swingup {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMatrix>;
using Weights = Eigen::Map<RowMajorMatrix>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;
using Bias = Eigen::Map<Eigen::VectorXd>;

void check_params(const MlpArchitecture& arch, std::size_t count) {
  if (count != arch.param_count())
    throw std::invalid_argument("parameter vector has " + std::to_string(count) +
                                " entries, architecture needs " +
                                std::to_string(arch.param_count()));
}

void activate(Activation activation, Eigen::MatrixXd& z) {
  if (activation == Activation::ReLU)
    z = z.cwiseMax(0.0);
  else
    z = z.array().tanh().matrix();
}

}  // namespace

std::string_view to_string(Activation activation) {
  return activation == Activation::ReLU ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpArchitecture::param_count() const { return layer_offset(layer_count()); }

std::size_t MlpArchitecture::layer_offset(std::size_t layer) const {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layer; ++i)
    offset += layer_sizes[i + 1] * layer_sizes[i] + layer_sizes[i + 1];
  return offset;
}

void MlpArchitecture::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("architecture needs >= 2 layer sizes");
  for (auto n : layer_sizes)
    if (n == 0) throw std::invalid_argument("architecture layer sizes must be > 0");
}

FlatParams init_params(const MlpArchitecture& arch, Rng& rng) {
  arch.validate();
  FlatParams params;
  params.reserve(arch.param_count());
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const std::size_t in = arch.layer_sizes[l];
    const std::size_t out = arch.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < out * in + out; ++i) params.push_back(rng.uniform(-bound, bound));
  }
  return params;
}

Eigen::MatrixXd forward_batch(const MlpArchitecture& arch, std::span<const double> params,
                              const Eigen::MatrixXd& inputs, ForwardCache* cache) {
  check_params(arch, params.size());
  if (static_cast<std::size_t>(inputs.rows()) != arch.input_size())
    throw std::invalid_argument("input has " + std::to_string(inputs.rows()) +
                                " rows, architecture expects " +
                                std::to_string(arch.input_size()));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(inputs);
  }
  Eigen::MatrixXd x = inputs;
  const double* p = params.data();
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const auto in = static_cast<Eigen::Index>(arch.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(arch.layer_sizes[l + 1]);
    ConstWeights w(p, out, in);
    ConstBias b(p + out * in, out);
    p += out * in + out;
    Eigen::MatrixXd z = w * x;
    z.colwise() += b;
    if (l + 1 < arch.layer_count()) activate(arch.activation, z);
    if (cache) cache->activations.push_back(z);
    x = std::move(z);
  }
  return x;
}

void backward_batch(const MlpArchitecture& arch, std::span<const double> params,
                    const ForwardCache& cache, const Eigen::MatrixXd& upstream,
                    std::span<double> param_grad, Eigen::MatrixXd* input_grad) {
  check_params(arch, params.size());
  check_params(arch, param_grad.size());
  if (cache.activations.size() != arch.layer_count() + 1)
    throw std::invalid_argument("forward cache does not match architecture");
  if (static_cast<std::size_t>(upstream.rows()) != arch.output_size() ||
      upstream.cols() != cache.activations.front().cols())
    throw std::invalid_argument("upstream gradient shape does not match network output");

  Eigen::MatrixXd delta = upstream;  // gradient w.r.t. layer pre-activation
  for (std::size_t l = arch.layer_count(); l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(arch.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(arch.layer_sizes[l + 1]);
    const std::size_t offset = arch.layer_offset(l);
    const Eigen::MatrixXd& x = cache.activations[l];

    Weights dw(param_grad.data() + offset, out, in);
    Bias db(param_grad.data() + offset + out * in, out);
    dw.noalias() += delta * x.transpose();
    db += delta.rowwise().sum();

    if (l == 0 && input_grad == nullptr) break;
    ConstWeights w(params.data() + offset, out, in);
    Eigen::MatrixXd dx = w.transpose() * delta;
    if (l > 0) {
      if (arch.activation == Activation::ReLU)
        dx = (x.array() > 0.0).select(dx, 0.0);
      else
        dx = dx.array() * (1.0 - x.array().square());
      delta = std::move(dx);
    } else {
      *input_grad = std::move(dx);
    }
  }
}

std::vector<double> forward(const MlpArchitecture& arch, std::span<const double> params,
                            std::span<const double> input) {
  if (input.size() != arch.input_size())
    throw std::invalid_argument("input has " + std::to_string(input.size()) +
                                " entries, architecture expects " +
                                std::to_string(arch.input_size()));
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd y = forward_batch(arch, params, x);
  return {y.data(), y.data() + y.size()};
}

Gradients backward(const MlpArchitecture& arch, std::span<const double> params,
                   std::span<const double> input, std::span<const double> upstream) {
  if (input.size() != arch.input_size())
    throw std::invalid_argument("input dimension mismatch");
  if (upstream.size() != arch.output_size())
    throw std::invalid_argument("upstream dimension mismatch");
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  ForwardCache cache;
  forward_batch(arch, params, x, &cache);
  const Eigen::MatrixXd up = Eigen::Map<const Eigen::VectorXd>(
      upstream.data(), static_cast<Eigen::Index>(upstream.size()));
  Gradients g;
  g.params.assign(arch.param_count(), 0.0);
  Eigen::MatrixXd dx;
  backward_batch(arch, params, cache, up, g.params, &dx);
  g.input.assign(dx.data(), dx.data() + dx.size());
  return g;
}

}  // namespace swingup
