#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swingup/dynamics.hpp"
#include "swingup/reward.hpp"

namespace swingup {

inline constexpr double kEvalDt = 0.002;       // 500 Hz
inline constexpr double kEpisodeDuration = 10.0;

struct TrajectorySample {
  double t = 0.0;
  State state;
  TorquePair torque;   // torque applied over the step that ended at t
  double action = 0.0; // normalized action applied over that step
  double reward = 0.0;
};

/// One evaluation episode. Sample 0 is the initial state with zero torque,
/// action and reward; a complete episode holds duration/dt + 1 samples.
struct Trajectory {
  double dt = kEvalDt;
  ModelParams model;  // plant actually simulated (after any parameter perturbation)
  std::vector<TrajectorySample> samples;
  bool diverged = false;
};

/// Maps the (possibly noisy) observed state to a normalized action.
using Controller = std::function<double(const State& observed)>;
/// Builds a controller whose internal randomness is seeded by the argument.
using ControllerFactory = std::function<Controller(std::uint64_t seed)>;

enum class PerturbationCategory {
  ModelParamScale,  // one plant parameter multiplied by (1 + m)
  VelocityNoise,    // observed velocities += N(0, m^2)
  TorqueNoise,      // applied torque += N(0, m^2 tau_max^2)
  TorqueDelay,      // actions delayed by m seconds, rounded to steps
  ActionResponse,   // applied torque scaled by (1 - m)
};

std::string_view to_string(PerturbationCategory category);
PerturbationCategory parse_perturbation_category(std::string_view name);

struct Perturbation {
  PerturbationCategory category = PerturbationCategory::ModelParamScale;
  double magnitude = 0.0;
  std::string parameter = "m2";  // only used by ModelParamScale
};

struct PerturbationSpec {
  PerturbationCategory category = PerturbationCategory::ModelParamScale;
  std::string parameter = "m2";
  std::vector<double> magnitudes;
  int trials = 1;

  void validate() const;
};

/// Repo robustness protocol: one sweep per category.
std::vector<PerturbationSpec> default_perturbation_suite();

/// Returns a copy of `params` with the named field multiplied by `factor`.
ModelParams scale_parameter(const ModelParams& params, std::string_view name, double factor);

struct EpisodeSetup {
  ModelParams model;
  RewardConfig reward;
  double duration = kEpisodeDuration;
  double dt = kEvalDt;
  double initial_noise = 0.0;  // half-width of uniform noise on both start angles
};

/// Rolls the plant from hanging rest (plus optional initial noise) with the
/// controller queried every step. Deterministic in (controller, setup,
/// perturbation, seed). A non-finite state truncates the trajectory and sets
/// `diverged`.
Trajectory run_episode(const Controller& controller, const EpisodeSetup& setup,
                       const std::optional<Perturbation>& perturbation, std::uint64_t seed);

/// Earliest sample time after which the tip stays strictly above y_th through
/// the end of the trajectory; nullopt if the last sample is not above.
std::optional<double> swingup_time(const Trajectory& traj, double y_threshold);

struct ScoreCriteria {
  double weight_swingup_time = 0.2, norm_swingup_time = 10.0;    // s
  double weight_torque_integral = 0.2, norm_torque_integral = 30.0;  // N m s
  double weight_energy = 0.2, norm_energy = 30.0;                // J
  double weight_peak_torque = 0.2, norm_peak_torque = 6.0;       // N m
  double weight_peak_velocity = 0.2, norm_peak_velocity = 40.0;  // rad/s
  double success_window = 2.0;                                   // s

  void validate() const;
};

struct EpisodeMetrics {
  bool success = false;
  bool diverged = false;
  std::optional<double> swingup_time;
  double torque_integral = 0.0;  // sum |tau| dt
  double energy = 0.0;           // sum |tau * omega| dt (actuator work)
  double peak_torque = 0.0;
  double peak_velocity = 0.0;
};

EpisodeMetrics measure(const Trajectory& traj, double y_threshold, const ScoreCriteria& criteria);

struct CriterionPenalty {
  std::string name;
  double value = 0.0;       // raw metric
  double normalizer = 0.0;
  double weight = 0.0;
  double penalty = 0.0;     // weight * min(1, value / normalizer)
};

std::vector<CriterionPenalty> criterion_penalties(const EpisodeMetrics& m, const ScoreCriteria& c);

/// 0 for an unsuccessful episode, otherwise 1 - sum of penalties clamped to [0, 1].
double performance_score(const EpisodeMetrics& metrics, const ScoreCriteria& criteria);
double performance_score(const Trajectory& traj, double y_threshold, const ScoreCriteria& criteria);

struct CurvePoint {
  double magnitude = 0.0;
  int passes = 0;
  int trials = 0;
  double pass_rate() const { return trials > 0 ? static_cast<double>(passes) / trials : 0.0; }
};

struct CategoryCurve {
  PerturbationCategory category;
  std::string parameter;
  std::vector<CurvePoint> points;
  double pass_fraction = 0.0;  // mean over every trial in the sweep
};

struct RobustnessResult {
  double score = 0.0;  // mean of the per-category pass fractions
  std::vector<CategoryCurve> curves;
};

/// Runs every (spec, magnitude, trial) episode; trials pass when the swing-up
/// is sustained over the success window. Per-trial seeds derive from `seed`.
RobustnessResult robustness_score(const ControllerFactory& factory, const EpisodeSetup& setup,
                                  const std::vector<PerturbationSpec>& specs,
                                  const ScoreCriteria& criteria, std::uint64_t seed);

struct ScoreReport {
  double performance = 0.0;
  std::optional<double> robustness;
  std::optional<double> average;  // (performance + robustness) / 2 when robustness was run
  EpisodeMetrics metrics;
  std::vector<CriterionPenalty> breakdown;
  std::vector<CategoryCurve> curves;
};

ScoreReport make_report(const Trajectory& nominal, double y_threshold, const ScoreCriteria& criteria,
                        const std::optional<RobustnessResult>& robustness);

}  // namespace swingup
