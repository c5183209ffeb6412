#include "swingup/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "swingup/observation.hpp"
#include "swingup/parallel.hpp"

namespace swingup {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kTrainStream = 12;
constexpr std::uint64_t kEvalStream = 13;

/// Squashed samples for a batch of policy outputs (2d x B).
struct SquashedBatch {
  Eigen::MatrixXd actions;   // d x B
  Eigen::MatrixXd log_std;   // d x B, clamped
  Eigen::VectorXd log_prob;  // B
};

SquashedBatch squash_batch(const Eigen::MatrixXd& out, const Eigen::MatrixXd& noise) {
  const Eigen::Index d = out.rows() / 2;
  const Eigen::Index n = out.cols();
  if (noise.rows() != d || noise.cols() != n)
    throw std::invalid_argument("policy noise shape does not match the batch");
  SquashedBatch s{Eigen::MatrixXd(d, n), Eigen::MatrixXd(d, n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double ls = std::clamp(out(d + i, j), kLogStdMin, kLogStdMax);
      const double u = out(i, j) + std::exp(ls) * noise(i, j);
      const double a = std::tanh(u);
      s.actions(i, j) = a;
      s.log_std(i, j) = ls;
      s.log_prob(j) += -0.5 * noise(i, j) * noise(i, j) - ls - kHalfLog2Pi -
                       std::log(1.0 - a * a + kSquashEpsilon);
    }
  }
  return s;
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

bool all_finite(const LossReport& r) {
  return std::isfinite(r.q1_loss) && std::isfinite(r.q2_loss) && std::isfinite(r.policy_loss) &&
         std::isfinite(r.ent_alpha_loss) && std::isfinite(r.mean_entropy) &&
         std::isfinite(r.ent_alpha);
}

nlohmann::json loss_json(const LossReport& r) {
  return {{"q1_loss", r.q1_loss},
          {"q2_loss", r.q2_loss},
          {"policy_loss", r.policy_loss},
          {"ent_alpha_loss", r.ent_alpha_loss},
          {"mean_entropy", r.mean_entropy},
          {"ent_alpha", r.ent_alpha}};
}

}  // namespace

void SacConfig::validate() const {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("SacConfig." + what); };
  if (!(gamma > 0 && gamma < 1)) fail("gamma must be in (0, 1)");
  if (!(polyak_tau >= 0 && polyak_tau <= 1)) fail("polyak_tau must be in [0, 1]");
  if (!(ent_alpha > 0) || !std::isfinite(ent_alpha)) fail("ent_alpha must be > 0");
  if (!std::isfinite(target_entropy)) fail("target_entropy must be finite");
  if (!(lr > 0) || !std::isfinite(lr)) fail("lr must be > 0");
  if (batch_size == 0) fail("batch_size must be > 0");
  if (buffer_capacity < batch_size) fail("buffer_capacity must be >= batch_size");
  if (hidden_width == 0 || hidden_layers == 0) fail("hidden_width and hidden_layers must be > 0");
  if (!(control_hz > 0) || !(episode_seconds > 0)) fail("control_hz and episode_seconds must be > 0");
  substeps();
  if (!(initial_noise >= 0) || !(eval_initial_noise >= 0)) fail("initial noise must be >= 0");
  if (eval_interval == 0 || eval_episodes == 0 || log_interval == 0)
    fail("eval_interval, eval_episodes and log_interval must be > 0");
  if (!(stop_success_rate >= 0 && stop_success_rate <= 1)) fail("stop_success_rate must be in [0, 1]");
}

std::size_t SacConfig::substeps() const {
  const double ratio = 1.0 / (control_hz * kEvalDt);
  const auto n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9)
    throw std::invalid_argument("SacConfig.control_hz must divide the 500 Hz plant rate");
  return static_cast<std::size_t>(n);
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& observations, const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd x(observations.rows() + actions.rows(), observations.cols());
  x.topRows(observations.rows()) = observations;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

Eigen::VectorXd critic_targets(const Batch& batch, const Policy& policy,
                               const MlpArchitecture& q_arch, std::span<const double> target_q1,
                               std::span<const double> target_q2, double ent_alpha, double gamma,
                               const Eigen::MatrixXd& noise) {
  if (batch.size() == 0) throw std::invalid_argument("critic_targets: empty batch");
  const Eigen::MatrixXd out = forward_batch(policy.arch, policy.params, batch.next_observations);
  const SquashedBatch next = squash_batch(out, noise);
  const Eigen::MatrixXd x = critic_input(batch.next_observations, next.actions);
  const Eigen::MatrixXd q1 = forward_batch(q_arch, target_q1, x);
  const Eigen::MatrixXd q2 = forward_batch(q_arch, target_q2, x);
  Eigen::VectorXd y(batch.size());
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    const double soft_value = std::min(q1(0, j), q2(0, j)) - ent_alpha * next.log_prob(j);
    y(j) = batch.rewards(j) + gamma * (1.0 - batch.dones(j)) * soft_value;
  }
  return y;
}

Eigen::VectorXd critic_targets(const Batch& batch, const Policy& policy,
                               const MlpArchitecture& q_arch, std::span<const double> target_q1,
                               std::span<const double> target_q2, double ent_alpha, double gamma,
                               Rng& rng) {
  const Eigen::MatrixXd noise =
      normal_matrix(static_cast<Eigen::Index>(policy.action_size()), batch.size(), rng);
  return critic_targets(batch, policy, q_arch, target_q1, target_q2, ent_alpha, gamma, noise);
}

void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: size mismatch");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

double policy_objective(const Policy& policy, const MlpArchitecture& q_arch,
                        std::span<const double> q1, std::span<const double> q2,
                        const Eigen::MatrixXd& observations, const Eigen::MatrixXd& noise,
                        double ent_alpha, std::vector<double>* grad, double* mean_log_prob) {
  const Eigen::Index n = observations.cols();
  const auto d = static_cast<Eigen::Index>(policy.action_size());
  ForwardCache policy_cache;
  const Eigen::MatrixXd out = forward_batch(policy.arch, policy.params, observations, &policy_cache);
  const SquashedBatch s = squash_batch(out, noise);
  const Eigen::MatrixXd x = critic_input(observations, s.actions);

  ForwardCache c1, c2;
  const Eigen::MatrixXd v1 = forward_batch(q_arch, q1, x, &c1);
  const Eigen::MatrixXd v2 = forward_batch(q_arch, q2, x, &c2);

  double objective = 0.0;
  Eigen::MatrixXd pick1 = Eigen::MatrixXd::Zero(1, n);
  Eigen::MatrixXd pick2 = Eigen::MatrixXd::Zero(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool first = v1(0, j) <= v2(0, j);
    (first ? pick1 : pick2)(0, j) = 1.0;
    objective += ent_alpha * s.log_prob(j) - (first ? v1(0, j) : v2(0, j));
  }
  objective /= static_cast<double>(n);
  if (mean_log_prob) *mean_log_prob = s.log_prob.mean();
  if (!grad) return objective;

  // dQmin/da through whichever critic attained the minimum.
  std::vector<double> scratch(q_arch.param_count(), 0.0);
  Eigen::MatrixXd g1, g2;
  backward_batch(q_arch, q1, c1, pick1, scratch, &g1);
  backward_batch(q_arch, q2, c2, pick2, scratch, &g2);
  const Eigen::MatrixXd dq_da = (g1 + g2).bottomRows(d);

  Eigen::MatrixXd upstream(2 * d, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double a = s.actions(i, j);
      const double one_minus = 1.0 - a * a;
      const double dlogp_du = 2.0 * a * one_minus / (one_minus + kSquashEpsilon);
      const double du_dls = std::exp(s.log_std(i, j)) * noise(i, j);
      const double dq_du = dq_da(i, j) * one_minus;
      upstream(i, j) = (ent_alpha * dlogp_du - dq_du) * inv_n;
      const double raw = out(d + i, j);
      const bool clamped = raw < kLogStdMin || raw > kLogStdMax;
      upstream(d + i, j) =
          clamped ? 0.0 : (ent_alpha * (-1.0 + dlogp_du * du_dls) - dq_du * du_dls) * inv_n;
    }
  }
  grad->assign(policy.arch.param_count(), 0.0);
  backward_batch(policy.arch, policy.params, policy_cache, upstream, *grad);
  return objective;
}

SacAgent::SacAgent(const SacConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, {kInitStream}));
  nets_.policy.arch = policy_architecture(cfg.hidden_width, cfg.hidden_layers, cfg.activation);
  nets_.policy.params = init_params(nets_.policy.arch, rng);
  nets_.q_arch = q_architecture(cfg.hidden_width, cfg.hidden_layers, cfg.activation);
  nets_.q1 = init_params(nets_.q_arch, rng);
  nets_.q2 = init_params(nets_.q_arch, rng);
  nets_.q1_target = nets_.q1;
  nets_.q2_target = nets_.q2;
  nets_.log_ent_alpha = std::log(cfg.ent_alpha);
  q1_opt_ = Adam(nets_.q1.size(), cfg.lr);
  q2_opt_ = Adam(nets_.q2.size(), cfg.lr);
  policy_opt_ = Adam(nets_.policy.params.size(), cfg.lr);
  alpha_opt_ = Adam(1, cfg.lr);
}

double SacAgent::ent_alpha() const { return std::exp(nets_.log_ent_alpha); }

LossReport SacAgent::update_step(const ReplayBuffer& buffer, Rng& rng) {
  if (buffer.size() < cfg_.batch_size)
    throw InsufficientBufferError("replay buffer holds " + std::to_string(buffer.size()) +
                                  " transitions, batch needs " + std::to_string(cfg_.batch_size));
  return update_on_batch(buffer.sample(cfg_.batch_size, rng), rng);
}

LossReport SacAgent::update_on_batch(const Batch& batch, Rng& rng) {
  LossReport report;
  const double alpha = ent_alpha();
  report.ent_alpha = alpha;
  const Eigen::Index n = batch.size();
  const auto d = static_cast<Eigen::Index>(nets_.policy.action_size());

  const Eigen::VectorXd y = critic_targets(batch, nets_.policy, nets_.q_arch, nets_.q1_target,
                                           nets_.q2_target, alpha, cfg_.gamma, rng);
  const Eigen::MatrixXd x = critic_input(batch.observations, batch.actions);

  const auto critic_step = [&](FlatParams& params, Adam& opt) {
    ForwardCache cache;
    const Eigen::MatrixXd q = forward_batch(nets_.q_arch, params, x, &cache);
    const Eigen::MatrixXd diff = q - y.transpose();
    const double loss = diff.squaredNorm() / static_cast<double>(n);
    std::vector<double> grad(params.size(), 0.0);
    backward_batch(nets_.q_arch, params, cache, diff * (2.0 / static_cast<double>(n)), grad);
    opt.step(params, grad);
    return loss;
  };
  report.q1_loss = critic_step(nets_.q1, q1_opt_);
  report.q2_loss = critic_step(nets_.q2, q2_opt_);

  const Eigen::MatrixXd noise = normal_matrix(d, n, rng);
  std::vector<double> grad;
  double mean_log_prob = 0.0;
  report.policy_loss = policy_objective(nets_.policy, nets_.q_arch, nets_.q1, nets_.q2,
                                        batch.observations, noise, alpha, &grad, &mean_log_prob);
  policy_opt_.step(nets_.policy.params, grad);
  report.mean_entropy = -mean_log_prob;

  if (cfg_.auto_entropy) {
    const double shortfall = mean_log_prob + cfg_.target_entropy;
    report.ent_alpha_loss = -nets_.log_ent_alpha * shortfall;
    const double g = -shortfall;
    alpha_opt_.step(std::span<double>(&nets_.log_ent_alpha, 1), std::span<const double>(&g, 1));
  }

  polyak_update(nets_.q1_target, nets_.q1, cfg_.polyak_tau);
  polyak_update(nets_.q2_target, nets_.q2, cfg_.polyak_tau);
  return report;
}

PolicyCheckpoint SacAgent::checkpoint(std::uint64_t seed, nlohmann::json metadata) const {
  PolicyCheckpoint cp;
  cp.seed = seed;
  metadata["log_ent_alpha"] = nets_.log_ent_alpha;
  cp.metadata = std::move(metadata);
  cp.networks = {{"policy", nets_.policy.arch, nets_.policy.params},
                 {"q1", nets_.q_arch, nets_.q1},
                 {"q2", nets_.q_arch, nets_.q2},
                 {"q1_target", nets_.q_arch, nets_.q1_target},
                 {"q2_target", nets_.q_arch, nets_.q2_target}};
  return cp;
}

EvalSummary evaluate_greedy(const Policy& policy, const EpisodeSetup& setup,
                            const ScoreCriteria& criteria, std::size_t episodes,
                            std::uint64_t seed) {
  std::vector<EpisodeMetrics> metrics(episodes);
  std::vector<double> returns(episodes, 0.0);
  parallel_for(episodes, [&](std::size_t i) {
    const Controller controller = [&policy](const State& s) { return act_greedy(policy, s); };
    const Trajectory traj = run_episode(controller, setup, std::nullopt, derive_seed(seed, {i}));
    metrics[i] = measure(traj, setup.reward.y_threshold, criteria);
    for (const auto& x : traj.samples) returns[i] += x.reward;
  });
  EvalSummary summary;
  for (std::size_t i = 0; i < episodes; ++i) {
    summary.success_rate += metrics[i].success ? 1.0 : 0.0;
    summary.mean_performance += performance_score(metrics[i], criteria);
    summary.mean_return += returns[i];
  }
  const auto n = static_cast<double>(episodes);
  summary.success_rate /= n;
  summary.mean_performance /= n;
  summary.mean_return /= n;
  return summary;
}

namespace {

bool better(const EvalSummary& a, const EvalSummary& b) {
  if (a.success_rate != b.success_rate) return a.success_rate > b.success_rate;
  if (a.mean_performance != b.mean_performance) return a.mean_performance > b.mean_performance;
  return a.mean_return > b.mean_return;
}

nlohmann::json eval_json(const EvalSummary& e) {
  return {{"success_rate", e.success_rate},
          {"performance", e.mean_performance},
          {"return", e.mean_return}};
}

}  // namespace

TrainingResult train(const TrainSetup& setup, const LogSink& log) {
  const SacConfig& cfg = setup.sac;
  cfg.validate();
  setup.model.validate();
  setup.reward.validate(setup.model);
  setup.criteria.validate();

  const auto emit = [&](const nlohmann::json& record) {
    if (log) log(record);
  };

  SacAgent agent(cfg, setup.seed);
  Rng rng(derive_seed(setup.seed, {kTrainStream}));
  ReplayBuffer buffer(cfg.buffer_capacity, kObservationSize);
  const std::size_t substeps = cfg.substeps();
  const auto episode_len =
      static_cast<std::size_t>(std::max(1LL, std::llround(cfg.episode_seconds * cfg.control_hz)));
  const EpisodeSetup eval_setup{setup.model, setup.reward, kEpisodeDuration, kEvalDt,
                                cfg.eval_initial_noise};
  const std::uint64_t eval_seed = derive_seed(setup.seed, {kEvalStream});

  State state;
  double prev_action = 0.0;
  std::size_t episode_step = 0, episode = 0;
  double episode_return = 0.0;
  const auto reset = [&] {
    state = {rng.uniform(-cfg.initial_noise, cfg.initial_noise),
             rng.uniform(-cfg.initial_noise, cfg.initial_noise), 0.0, 0.0};
    prev_action = 0.0;
    episode_step = 0;
    episode_return = 0.0;
  };
  reset();

  const auto metadata = [&](std::size_t step, const EvalSummary& eval) {
    return nlohmann::json{{"stage", "sac"},
                          {"step", step},
                          {"setting", to_string(setup.model.setting)},
                          {"eval", eval_json(eval)}};
  };

  TrainingResult result;
  bool have_best = false;
  LossReport last_loss;
  std::size_t step = 0;
  bool evaluated_last = false;
  EvalSummary last_eval;
  while (step < cfg.total_steps) {
    const Observation obs = observe(state);
    double action;
    if (step < cfg.warmup_steps) {
      action = rng.uniform(-1.0, 1.0);
    } else {
      action = sample_squashed(agent.networks().policy.head(obs), rng).action.front();
    }
    State next = state;
    for (std::size_t k = 0; k < substeps; ++k) next = swingup::step(next, action, kEvalDt, setup.model);
    ++step;
    evaluated_last = false;

    if (!next.finite()) {
      emit({{"type", "plant_diverged"}, {"step", step}, {"episode", episode}});
      reset();
      ++episode;
      continue;
    }
    const double reward = surrogate_reward(next, {action, prev_action}, setup.model, setup.reward);
    const Observation next_obs = observe(next);
    buffer.add(obs, action, reward, next_obs, false);
    state = next;
    prev_action = action;
    episode_return += reward;
    if (++episode_step >= episode_len) {
      emit({{"type", "episode"}, {"step", step}, {"episode", episode}, {"return", episode_return}});
      ++episode;
      reset();
    }

    if (step >= cfg.warmup_steps && buffer.size() >= cfg.batch_size) {
      last_loss = agent.update_step(buffer, rng);
      if (!all_finite(last_loss)) {
        nlohmann::json dump = loss_json(last_loss);
        dump["step"] = step;
        dump["buffer_size"] = buffer.size();
        dump["log_ent_alpha"] = agent.networks().log_ent_alpha;
        throw TrainingDiverged("non-finite SAC loss at step " + std::to_string(step), dump);
      }
      if (step % cfg.log_interval == 0) {
        nlohmann::json record = loss_json(last_loss);
        record["type"] = "update";
        record["step"] = step;
        emit(record);
      }
    }

    if (step % cfg.eval_interval == 0) {
      const EvalSummary eval = evaluate_greedy(agent.networks().policy, eval_setup, setup.criteria,
                                               cfg.eval_episodes, eval_seed);
      evaluated_last = true;
      last_eval = eval;
      const bool improved = !have_best || better(eval, result.best_eval);
      if (improved) {
        result.best = agent.checkpoint(setup.seed, metadata(step, eval));
        result.best_eval = eval;
        have_best = true;
      }
      nlohmann::json record = eval_json(eval);
      record["type"] = "eval";
      record["step"] = step;
      record["best"] = improved;
      emit(record);
      if (cfg.stop_success_rate > 0 && eval.success_rate >= cfg.stop_success_rate) {
        emit({{"type", "early_stop"}, {"step", step}});
        break;
      }
    }
  }

  EvalSummary final_eval = last_eval;
  if (!evaluated_last) {
    final_eval = evaluate_greedy(agent.networks().policy, eval_setup, setup.criteria,
                                 cfg.eval_episodes, eval_seed);
    nlohmann::json record = eval_json(final_eval);
    record["type"] = "eval";
    record["step"] = step;
    record["best"] = !have_best || better(final_eval, result.best_eval);
    emit(record);
    if (record["best"].get<bool>()) {
      result.best = agent.checkpoint(setup.seed, metadata(step, final_eval));
      result.best_eval = final_eval;
    }
  }
  result.final = agent.checkpoint(setup.seed, metadata(step, final_eval));
  result.steps = step;
  emit({{"type", "done"}, {"step", step}, {"best_eval", eval_json(result.best_eval)}});
  return result;
}

}  // namespace swingup
