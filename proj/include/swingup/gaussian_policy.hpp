#pragma once

#include <span>
#include <vector>

#include "swingup/mlp.hpp"
#include "swingup/observation.hpp"
#include "swingup/rng.hpp"

namespace swingup {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEpsilon = 1e-6;

/// Diagonal Gaussian over pre-squash actions.
struct GaussianHead {
  std::vector<double> mean;
  std::vector<double> log_std;  // clamped to [kLogStdMin, kLogStdMax]
};

/// Splits a policy-network output [mean..., log_std...] and clamps log_std.
GaussianHead split_head(std::span<const double> output);

struct SquashedSample {
  std::vector<double> pre_tanh;
  std::vector<double> action;
  double log_prob = 0.0;
};

/// u = mean + exp(log_std) * noise, action = tanh(u), log-probability with the
/// tanh change-of-variables correction.
SquashedSample sample_squashed(const GaussianHead& head, std::span<const double> noise);
SquashedSample sample_squashed(const GaussianHead& head, Rng& rng);

/// Log-density of a squashed action given its pre-tanh value.
double squashed_log_prob(const GaussianHead& head, std::span<const double> pre_tanh);

/// Numerically safe inverse of tanh for |a| < 1.
double atanh_safe(double a);

/// Squashed-Gaussian policy: an MLP whose output is [mean, log_std] per action dimension.
struct Policy {
  MlpArchitecture arch;
  FlatParams params;

  std::size_t action_size() const { return arch.output_size() / 2; }
  GaussianHead head(std::span<const double> observation) const;
};

MlpArchitecture policy_architecture(std::size_t hidden_width, std::size_t hidden_layers,
                                    Activation activation, std::size_t action_size = 1);
MlpArchitecture q_architecture(std::size_t hidden_width, std::size_t hidden_layers,
                               Activation activation, std::size_t action_size = 1);

/// tanh(mean(observation)) for the first action dimension.
double act_greedy(const Policy& policy, std::span<const double> observation);
double act_greedy(const Policy& policy, const State& s);

}  // namespace swingup
