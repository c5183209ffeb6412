#include "swingup/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace swingup {

RewardConfig RewardConfig::defaults(Actuation setting) {
  RewardConfig cfg;
  cfg.y_threshold = setting == Actuation::Acrobot ? 0.375 : 0.35;
  return cfg;
}

void RewardConfig::validate(const ModelParams& params) const {
  const auto weight = [](double w, const char* name) {
    if (!std::isfinite(w) || w < 0)
      throw std::invalid_argument(std::string("RewardConfig.") + name + " must be >= 0");
  };
  weight(alpha, "alpha");
  weight(beta, "beta");
  weight(rho1, "rho1");
  weight(rho2, "rho2");
  weight(phi1, "phi1");
  weight(phi2, "phi2");
  weight(eta, "eta");
  const double reach = params.l1 + params.l2;
  if (!std::isfinite(y_threshold) || !(y_threshold > -reach && y_threshold < reach))
    throw std::invalid_argument("RewardConfig.y_th must lie strictly inside (-(l1+l2), l1+l2)");
}

RewardBranch branch(const State& s, const ModelParams& params, const RewardConfig& cfg) {
  return end_effector_height(s, params) > cfg.y_threshold ? RewardBranch::AboveThreshold
                                                          : RewardBranch::BelowThreshold;
}

double action_change(const StepContext& ctx) {
  const double d = ctx.action - ctx.prev_action;
  return d * d;
}

double surrogate_reward(const State& s, const StepContext& ctx, const ModelParams& params,
                        const RewardConfig& cfg) {
  const double v = potential_energy(s, params);
  const double a2 = ctx.action * ctx.action;
  const double da = action_change(ctx);
  if (branch(s, params, cfg) == RewardBranch::AboveThreshold) {
    const double align = 1.0 + std::cos(s.theta2);
    const double t = kinetic_energy(s, params);
    return v + cfg.alpha * align * align - cfg.beta * t - cfg.rho1 * a2 - cfg.phi1 * da;
  }
  const double w2 = s.omega1 * s.omega1 + s.omega2 * s.omega2;
  return v - cfg.rho2 * a2 - cfg.phi2 * da - cfg.eta * w2;
}

}  // namespace swingup
