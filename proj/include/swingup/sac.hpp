#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "swingup/adam.hpp"
#include "swingup/checkpoint.hpp"
#include "swingup/gaussian_policy.hpp"
#include "swingup/replay_buffer.hpp"
#include "swingup/scoring.hpp"

namespace swingup {

struct SacConfig {
  double gamma = 0.99;
  double ent_alpha = 0.2;       // initial value when auto-tuned, fixed value otherwise
  bool auto_entropy = true;
  double target_entropy = -1.0; // -(action dimension)
  double polyak_tau = 0.005;
  double lr = 1e-3;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 1'000'000;
  double control_hz = 100.0;    // policy decisions per second; plant runs at 500 Hz
  std::size_t total_steps = 500'000;
  std::size_t warmup_steps = 10'000;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 2;
  Activation activation = Activation::ReLU;
  double episode_seconds = 10.0;
  double initial_noise = 0.01;  // U(-x, x) on both start angles during training
  std::size_t eval_interval = 10'000;
  std::size_t eval_episodes = 10;
  double eval_initial_noise = 0.01;
  std::size_t log_interval = 1'000;
  double stop_success_rate = 0.0;  // stop once evaluation reaches this rate; 0 disables

  void validate() const;
  /// Plant sub-steps of kEvalDt per control decision.
  std::size_t substeps() const;
};

struct SacNetworks {
  Policy policy;
  MlpArchitecture q_arch;
  FlatParams q1, q2, q1_target, q2_target;
  double log_ent_alpha = 0.0;
};

struct LossReport {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double policy_loss = 0.0;
  double ent_alpha_loss = 0.0;
  double mean_entropy = 0.0;
  double ent_alpha = 0.0;
};

/// Stacks observations over actions into critic inputs.
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& observations, const Eigen::MatrixXd& actions);

/// y = r + gamma (1 - done) (min(Q1', Q2')(s', a') - ent_alpha log pi(a'|s')) with
/// a' drawn from the current policy using the given standard-normal noise
/// (action_dim x B).
Eigen::VectorXd critic_targets(const Batch& batch, const Policy& policy,
                               const MlpArchitecture& q_arch, std::span<const double> target_q1,
                               std::span<const double> target_q2, double ent_alpha, double gamma,
                               const Eigen::MatrixXd& noise);
Eigen::VectorXd critic_targets(const Batch& batch, const Policy& policy,
                               const MlpArchitecture& q_arch, std::span<const double> target_q1,
                               std::span<const double> target_q2, double ent_alpha, double gamma,
                               Rng& rng);

/// target <- (1 - tau) target + tau online
void polyak_update(std::span<double> target, std::span<const double> online, double tau);

class InsufficientBufferError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Twin-critic SAC learner. Owns the networks and optimizer state; not
/// thread-safe, snapshots of the policy may be shared read-only.
class SacAgent {
 public:
  SacAgent(const SacConfig& cfg, std::uint64_t seed);

  /// One critic step, one policy step, one temperature step, then the target update.
  LossReport update_step(const ReplayBuffer& buffer, Rng& rng);
  LossReport update_on_batch(const Batch& batch, Rng& rng);

  double ent_alpha() const;
  const SacConfig& config() const { return cfg_; }
  const SacNetworks& networks() const { return nets_; }
  SacNetworks& networks() { return nets_; }

  PolicyCheckpoint checkpoint(std::uint64_t seed, nlohmann::json metadata) const;

 private:
  SacConfig cfg_;
  SacNetworks nets_;
  Adam q1_opt_, q2_opt_, policy_opt_, alpha_opt_;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, nlohmann::json diagnostic)
      : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}
  const nlohmann::json& diagnostic() const { return diagnostic_; }

 private:
  nlohmann::json diagnostic_;
};

struct TrainSetup {
  ModelParams model;
  RewardConfig reward;
  SacConfig sac;
  ScoreCriteria criteria;
  std::uint64_t seed = 0;
};

struct EvalSummary {
  double success_rate = 0.0;
  double mean_performance = 0.0;
  double mean_return = 0.0;
};

/// Greedy rollouts under the evaluation protocol (500 Hz, 10 s) from
/// `episodes` seeded start states.
EvalSummary evaluate_greedy(const Policy& policy, const EpisodeSetup& setup,
                            const ScoreCriteria& criteria, std::size_t episodes,
                            std::uint64_t seed);

struct TrainingResult {
  PolicyCheckpoint best;
  PolicyCheckpoint final;
  EvalSummary best_eval;
  std::size_t steps = 0;
};

using LogSink = std::function<void(const nlohmann::json&)>;

/// Full training loop: warm-up with uniform actions, then one update per
/// environment step. Evaluation records and loss records go to `log`.
/// Throws TrainingDiverged on a non-finite loss.
TrainingResult train(const TrainSetup& setup, const LogSink& log = {});

}  // namespace swingup

namespace swingup {

/// Reparameterised policy objective mean(ent_alpha * log pi(a|s) - min(Q1, Q2)(s, a))
/// with a = tanh(mean + exp(log_std) * noise). When `grad` is non-null the exact
/// gradient with respect to the policy parameters is written to it.
double policy_objective(const Policy& policy, const MlpArchitecture& q_arch,
                        std::span<const double> q1, std::span<const double> q2,
                        const Eigen::MatrixXd& observations, const Eigen::MatrixXd& noise,
                        double ent_alpha, std::vector<double>* grad, double* mean_log_prob = nullptr);

}  // namespace swingup
