#pragma once

#include "swingup/dynamics.hpp"

namespace swingup {

/// Weights of the height-gated surrogate reward.
struct RewardConfig {
  double alpha = 2.0;   // link-alignment bonus (above threshold)
  double beta = 1.0;    // kinetic-energy penalty (above threshold)
  double rho1 = 0.1;    // action magnitude, above threshold
  double rho2 = 0.02;   // action magnitude, below threshold
  double phi1 = 0.15;   // action change, above threshold
  double phi2 = 0.15;   // action change, below threshold
  double eta = 0.02;    // joint-velocity penalty (below threshold)
  double y_threshold = 0.35;

  /// Tuned weights for each setting; only the height threshold differs.
  static RewardConfig defaults(Actuation setting);

  void validate(const ModelParams& params) const;
};

struct StepContext {
  double action = 0.0;
  double prev_action = 0.0;
};

enum class RewardBranch { AboveThreshold, BelowThreshold };

RewardBranch branch(const State& s, const ModelParams& params, const RewardConfig& cfg);

/// Squared action change; the smoothness penalty uses this so it is symmetric.
double action_change(const StepContext& ctx);

/// Evaluated on the post-step state together with the action that produced it.
double surrogate_reward(const State& s, const StepContext& ctx, const ModelParams& params,
                        const RewardConfig& cfg);

}  // namespace swingup
