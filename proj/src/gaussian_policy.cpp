#include "swingup/gaussian_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swingup {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

GaussianHead split_head(std::span<const double> output) {
  if (output.empty() || output.size() % 2 != 0)
    throw std::invalid_argument("policy output must hold mean and log_std halves");
  const std::size_t n = output.size() / 2;
  GaussianHead head;
  head.mean.assign(output.begin(), output.begin() + n);
  head.log_std.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    head.log_std[i] = std::clamp(output[n + i], kLogStdMin, kLogStdMax);
  return head;
}

SquashedSample sample_squashed(const GaussianHead& head, std::span<const double> noise) {
  const std::size_t n = head.mean.size();
  if (noise.size() != n || head.log_std.size() != n)
    throw std::invalid_argument("sample_squashed: dimension mismatch");
  SquashedSample out;
  out.pre_tanh.resize(n);
  out.action.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ls = std::clamp(head.log_std[i], kLogStdMin, kLogStdMax);
    const double u = head.mean[i] + std::exp(ls) * noise[i];
    const double a = std::tanh(u);
    out.pre_tanh[i] = u;
    out.action[i] = a;
    out.log_prob += -0.5 * noise[i] * noise[i] - ls - kHalfLog2Pi -
                    std::log(1.0 - a * a + kSquashEpsilon);
  }
  return out;
}

SquashedSample sample_squashed(const GaussianHead& head, Rng& rng) {
  std::vector<double> noise(head.mean.size());
  for (auto& z : noise) z = rng.normal();
  return sample_squashed(head, noise);
}

double squashed_log_prob(const GaussianHead& head, std::span<const double> pre_tanh) {
  double lp = 0.0;
  for (std::size_t i = 0; i < head.mean.size(); ++i) {
    const double ls = std::clamp(head.log_std[i], kLogStdMin, kLogStdMax);
    const double z = (pre_tanh[i] - head.mean[i]) / std::exp(ls);
    const double a = std::tanh(pre_tanh[i]);
    lp += -0.5 * z * z - ls - kHalfLog2Pi - std::log(1.0 - a * a + kSquashEpsilon);
  }
  return lp;
}

double atanh_safe(double a) {
  // 0.5 * (log1p(a) - log1p(-a)) keeps precision close to +-1.
  return 0.5 * (std::log1p(a) - std::log1p(-a));
}

GaussianHead Policy::head(std::span<const double> observation) const {
  return split_head(forward(arch, params, observation));
}

MlpArchitecture policy_architecture(std::size_t hidden_width, std::size_t hidden_layers,
                                    Activation activation, std::size_t action_size) {
  MlpArchitecture arch;
  arch.activation = activation;
  arch.layer_sizes.push_back(kObservationSize);
  for (std::size_t i = 0; i < hidden_layers; ++i) arch.layer_sizes.push_back(hidden_width);
  arch.layer_sizes.push_back(2 * action_size);
  return arch;
}

MlpArchitecture q_architecture(std::size_t hidden_width, std::size_t hidden_layers,
                               Activation activation, std::size_t action_size) {
  MlpArchitecture arch;
  arch.activation = activation;
  arch.layer_sizes.push_back(kObservationSize + action_size);
  for (std::size_t i = 0; i < hidden_layers; ++i) arch.layer_sizes.push_back(hidden_width);
  arch.layer_sizes.push_back(1);
  return arch;
}

double act_greedy(const Policy& policy, std::span<const double> observation) {
  const auto out = forward(policy.arch, policy.params, observation);
  return std::tanh(out.front());
}

double act_greedy(const Policy& policy, const State& s) {
  const Observation obs = observe(s);
  return act_greedy(policy, obs);
}

}  // namespace swingup
