#include "swingup/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "swingup/parallel.hpp"
#include "swingup/rng.hpp"

namespace swingup {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::size_t step_count(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

std::string_view to_string(PerturbationCategory category) {
  switch (category) {
    case PerturbationCategory::ModelParamScale: return "model_param_scale";
    case PerturbationCategory::VelocityNoise: return "velocity_noise";
    case PerturbationCategory::TorqueNoise: return "torque_noise";
    case PerturbationCategory::TorqueDelay: return "torque_delay";
    case PerturbationCategory::ActionResponse: return "action_response";
  }
  return "unknown";
}

PerturbationCategory parse_perturbation_category(std::string_view name) {
  for (auto c : {PerturbationCategory::ModelParamScale, PerturbationCategory::VelocityNoise,
                 PerturbationCategory::TorqueNoise, PerturbationCategory::TorqueDelay,
                 PerturbationCategory::ActionResponse})
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown perturbation category '" + std::string(name) + "'");
}

void PerturbationSpec::validate() const {
  if (magnitudes.empty()) throw std::invalid_argument("perturbation magnitude grid is empty");
  for (double m : magnitudes)
    if (!std::isfinite(m) || m < 0)
      throw std::invalid_argument("perturbation magnitudes must be finite and >= 0");
  if (trials < 1) throw std::invalid_argument("perturbation trials must be >= 1");
  if (category == PerturbationCategory::ModelParamScale)
    scale_parameter(ModelParams{}, parameter, 1.0);  // rejects unknown names
}

std::vector<PerturbationSpec> default_perturbation_suite() {
  return {
      {PerturbationCategory::ModelParamScale, "m2", {0.0, 0.1, 0.2, 0.3}, 3},
      {PerturbationCategory::VelocityNoise, "", {0.0, 0.05, 0.1, 0.2}, 3},
      {PerturbationCategory::TorqueNoise, "", {0.0, 0.02, 0.05, 0.1}, 3},
      {PerturbationCategory::TorqueDelay, "", {0.0, 0.004, 0.01, 0.02}, 3},
      {PerturbationCategory::ActionResponse, "", {0.0, 0.1, 0.2, 0.3}, 3},
  };
}

ModelParams scale_parameter(const ModelParams& params, std::string_view name, double factor) {
  ModelParams p = params;
  double* field = nullptr;
  if (name == "m1") field = &p.m1;
  else if (name == "m2") field = &p.m2;
  else if (name == "l1") field = &p.l1;
  else if (name == "l2") field = &p.l2;
  else if (name == "r1") field = &p.r1;
  else if (name == "r2") field = &p.r2;
  else if (name == "I1") field = &p.I1;
  else if (name == "I2") field = &p.I2;
  else if (name == "b1") field = &p.b1;
  else if (name == "b2") field = &p.b2;
  else if (name == "cf1") field = &p.cf1;
  else if (name == "cf2") field = &p.cf2;
  else if (name == "g") field = &p.g;
  else if (name == "tau_max") field = &p.tau_max;
  else throw std::invalid_argument("unknown model parameter '" + std::string(name) + "'");
  *field *= factor;
  return p;
}

Trajectory run_episode(const Controller& controller, const EpisodeSetup& setup,
                       const std::optional<Perturbation>& perturbation, std::uint64_t seed) {
  if (!(setup.dt > 0) || !(setup.duration > 0))
    throw std::invalid_argument("episode dt and duration must be > 0");

  const auto category = perturbation ? std::optional(perturbation->category) : std::nullopt;
  const double magnitude = perturbation ? perturbation->magnitude : 0.0;

  Trajectory traj;
  traj.dt = setup.dt;
  traj.model = setup.model;
  if (category == PerturbationCategory::ModelParamScale)
    traj.model = scale_parameter(setup.model, perturbation->parameter, 1.0 + magnitude);
  const ModelParams& plant = traj.model;

  Rng init_rng(derive_seed(seed, {kInitStream}));
  Rng noise_rng(derive_seed(seed, {kNoiseStream}));

  State s;
  if (setup.initial_noise > 0) {
    s.theta1 = init_rng.uniform(-setup.initial_noise, setup.initial_noise);
    s.theta2 = init_rng.uniform(-setup.initial_noise, setup.initial_noise);
  }

  std::deque<double> delay_line;
  if (category == PerturbationCategory::TorqueDelay)
    delay_line.assign(static_cast<std::size_t>(std::llround(magnitude / setup.dt)), 0.0);

  const std::size_t steps = step_count(setup.duration, setup.dt);
  traj.samples.reserve(steps + 1);
  traj.samples.push_back({0.0, s, {}, 0.0, 0.0});

  double prev_action = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    State observed = s;
    if (category == PerturbationCategory::VelocityNoise) {
      observed.omega1 += noise_rng.normal(0.0, magnitude);
      observed.omega2 += noise_rng.normal(0.0, magnitude);
    }
    double action = controller(observed);
    if (!std::isfinite(action)) {
      traj.diverged = true;
      break;
    }
    action = std::clamp(action, -1.0, 1.0);

    if (!delay_line.empty()) {
      delay_line.push_back(action);
      action = delay_line.front();
      delay_line.pop_front();
    }

    TorquePair tau = apply_actuation(action, plant);
    double& actuated = plant.setting == Actuation::Acrobot ? tau.tau2 : tau.tau1;
    if (category == PerturbationCategory::TorqueNoise) {
      actuated += noise_rng.normal(0.0, magnitude * setup.model.tau_max);
      actuated = std::clamp(actuated, -plant.tau_max, plant.tau_max);
    }
    if (category == PerturbationCategory::ActionResponse) actuated *= 1.0 - magnitude;

    const State next = step_torque(s, tau, setup.dt, plant);
    if (!next.finite()) {
      traj.diverged = true;
      break;
    }
    const double r = surrogate_reward(next, {action, prev_action}, plant, setup.reward);
    traj.samples.push_back({static_cast<double>(k) * setup.dt, next, tau, action, r});
    prev_action = action;
    s = next;
  }
  return traj;
}

namespace {

/// Index of the first sample from which the tip stays above y_th, or nullopt.
std::optional<std::size_t> swingup_index(const Trajectory& traj, double y_threshold) {
  std::optional<std::size_t> first;
  for (std::size_t k = traj.samples.size(); k-- > 0;) {
    if (end_effector_height(traj.samples[k].state, traj.model) > y_threshold)
      first = k;
    else
      break;
  }
  return first;
}

}  // namespace

std::optional<double> swingup_time(const Trajectory& traj, double y_threshold) {
  const auto k = swingup_index(traj, y_threshold);
  if (!k) return std::nullopt;
  return traj.samples[*k].t;
}

void ScoreCriteria::validate() const {
  for (double w : {weight_swingup_time, weight_torque_integral, weight_energy, weight_peak_torque,
                   weight_peak_velocity})
    if (!std::isfinite(w) || w < 0) throw std::invalid_argument("score weights must be >= 0");
  for (double n : {norm_swingup_time, norm_torque_integral, norm_energy, norm_peak_torque,
                   norm_peak_velocity})
    if (!std::isfinite(n) || n <= 0) throw std::invalid_argument("score normalizers must be > 0");
  if (!std::isfinite(success_window) || success_window < 0)
    throw std::invalid_argument("success_window must be >= 0");
}

EpisodeMetrics measure(const Trajectory& traj, double y_threshold, const ScoreCriteria& criteria) {
  EpisodeMetrics m;
  m.diverged = traj.diverged;
  const auto& samples = traj.samples;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& x = samples[k];
    m.peak_velocity = std::max({m.peak_velocity, std::abs(x.state.omega1), std::abs(x.state.omega2)});
    m.peak_torque = std::max({m.peak_torque, std::abs(x.torque.tau1), std::abs(x.torque.tau2)});
    if (k == 0) continue;
    const auto& before = samples[k - 1].state;
    m.torque_integral += (std::abs(x.torque.tau1) + std::abs(x.torque.tau2)) * traj.dt;
    m.energy += (std::abs(x.torque.tau1 * before.omega1) + std::abs(x.torque.tau2 * before.omega2)) *
                traj.dt;
  }
  const auto first = swingup_index(traj, y_threshold);
  if (first) m.swingup_time = samples[*first].t;
  const auto window = static_cast<std::size_t>(std::llround(criteria.success_window / traj.dt));
  m.success = !traj.diverged && first && !samples.empty() && *first + window <= samples.size() - 1;
  return m;
}

std::vector<CriterionPenalty> criterion_penalties(const EpisodeMetrics& m, const ScoreCriteria& c) {
  const auto entry = [](std::string name, double value, double norm, double weight) {
    return CriterionPenalty{std::move(name), value, norm, weight,
                            weight * std::min(1.0, value / norm)};
  };
  return {
      entry("swingup_time", m.swingup_time.value_or(c.norm_swingup_time), c.norm_swingup_time,
            c.weight_swingup_time),
      entry("torque_integral", m.torque_integral, c.norm_torque_integral, c.weight_torque_integral),
      entry("energy", m.energy, c.norm_energy, c.weight_energy),
      entry("peak_torque", m.peak_torque, c.norm_peak_torque, c.weight_peak_torque),
      entry("peak_velocity", m.peak_velocity, c.norm_peak_velocity, c.weight_peak_velocity),
  };
}

double performance_score(const EpisodeMetrics& metrics, const ScoreCriteria& criteria) {
  if (!metrics.success) return 0.0;
  double total = 0.0;
  for (const auto& p : criterion_penalties(metrics, criteria)) total += p.penalty;
  return std::clamp(1.0 - total, 0.0, 1.0);
}

double performance_score(const Trajectory& traj, double y_threshold, const ScoreCriteria& criteria) {
  return performance_score(measure(traj, y_threshold, criteria), criteria);
}

RobustnessResult robustness_score(const ControllerFactory& factory, const EpisodeSetup& setup,
                                  const std::vector<PerturbationSpec>& specs,
                                  const ScoreCriteria& criteria, std::uint64_t seed) {
  struct Job {
    std::size_t spec, point;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    specs[c].validate();
    for (std::size_t m = 0; m < specs[c].magnitudes.size(); ++m)
      for (int t = 0; t < specs[c].trials; ++t) jobs.push_back({c, m, t});
  }

  std::vector<char> passed(jobs.size(), 0);
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    const PerturbationSpec& spec = specs[job.spec];
    const Perturbation perturbation{spec.category, spec.magnitudes[job.point], spec.parameter};
    const std::uint64_t trial_seed =
        derive_seed(seed, {job.spec, job.point, static_cast<std::uint64_t>(job.trial)});
    const Controller controller = factory(derive_seed(trial_seed, {0}));
    const Trajectory traj = run_episode(controller, setup, perturbation, trial_seed);
    passed[i] = measure(traj, setup.reward.y_threshold, criteria).success ? 1 : 0;
  });

  RobustnessResult result;
  for (const auto& spec : specs) {
    CategoryCurve curve{spec.category, spec.parameter, {}, 0.0};
    for (double m : spec.magnitudes) curve.points.push_back({m, 0, 0});
    result.curves.push_back(std::move(curve));
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& point = result.curves[jobs[i].spec].points[jobs[i].point];
    point.trials += 1;
    point.passes += passed[i];
  }
  double total = 0.0;
  for (auto& curve : result.curves) {
    int passes = 0, trials = 0;
    for (const auto& p : curve.points) {
      passes += p.passes;
      trials += p.trials;
    }
    curve.pass_fraction = static_cast<double>(passes) / trials;
    total += curve.pass_fraction;
  }
  result.score = result.curves.empty() ? 0.0 : total / static_cast<double>(result.curves.size());
  return result;
}

ScoreReport make_report(const Trajectory& nominal, double y_threshold, const ScoreCriteria& criteria,
                        const std::optional<RobustnessResult>& robustness) {
  ScoreReport report;
  report.metrics = measure(nominal, y_threshold, criteria);
  report.performance = performance_score(report.metrics, criteria);
  report.breakdown = criterion_penalties(report.metrics, criteria);
  if (robustness) {
    report.robustness = robustness->score;
    report.average = 0.5 * (report.performance + robustness->score);
    report.curves = robustness->curves;
  }
  return report;
}

}  // namespace swingup
