#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "swingup/scoring.hpp"
#include "swingup/trajectory_io.hpp"

using namespace swingup;
using std::numbers::pi;

namespace {

EpisodeSetup damped_setup() {
  EpisodeSetup setup;
  setup.model = ModelParams::defaults(Actuation::Pendubot);
  setup.reward = RewardConfig::defaults(Actuation::Pendubot);
  return setup;
}

/// 10 s trajectory whose tip is upright where `up(t)` holds and hanging otherwise.
template <typename Up>
Trajectory synthetic(Up&& up) {
  Trajectory traj;
  traj.model = ModelParams::defaults(Actuation::Pendubot);
  for (int k = 0; k <= 5000; ++k) {
    const double t = k * kEvalDt;
    traj.samples.push_back({t, State{up(k) ? pi : 0.0, 0.0, 0.0, 0.0}, {}, 0.0, 0.0});
  }
  return traj;
}

/// Setup where holding the first link slightly deflected counts as success.
EpisodeSetup easy_setup() {
  EpisodeSetup setup = damped_setup();
  setup.reward.y_threshold = -0.59;
  setup.duration = 4.0;
  return setup;
}

const Controller push = [](const State&) { return 0.5; };
const Controller hold = [](const State& s) { return 0.5 - 0.3 * s.omega1; };

}  // namespace

TEST_CASE("episode shape and determinism") {
  const EpisodeSetup setup = damped_setup();
  const Controller wiggle = [](const State& s) { return std::sin(3 * s.theta1) + 0.3; };
  const Trajectory a = run_episode(wiggle, setup, std::nullopt, 1);
  REQUIRE(a.samples.size() == 5001);
  CHECK(a.samples.front().t == 0.0);
  CHECK(a.samples.front().torque == TorquePair{});
  CHECK(a.samples.front().state == State{});
  CHECK(a.samples.back().t == doctest::Approx(10.0).epsilon(1e-15));
  for (std::size_t k = 1; k < a.samples.size(); ++k) REQUIRE(a.samples[k].t > a.samples[k - 1].t);
  CHECK_FALSE(a.diverged);
  CHECK(trajectory_to_csv(a) == trajectory_to_csv(run_episode(wiggle, setup, std::nullopt, 1)));
}

TEST_CASE("zero controller stays down and fails") {
  const EpisodeSetup setup = damped_setup();
  const Trajectory traj = run_episode([](const State&) { return 0.0; }, setup, std::nullopt, 0);
  for (const auto& s : traj.samples) CHECK(s.state == State{});
  const EpisodeMetrics m = measure(traj, setup.reward.y_threshold, {});
  CHECK_FALSE(m.success);
  CHECK(performance_score(traj, setup.reward.y_threshold, {}) == 0.0);
}

TEST_CASE("non-finite actions mark the episode diverged") {
  const EpisodeSetup setup = damped_setup();
  const Controller bad = [](const State& s) { return s.omega1 > 0.5 ? std::nan("") : 1.0; };
  const Trajectory traj = run_episode(bad, setup, std::nullopt, 0);
  CHECK(traj.diverged);
  CHECK(traj.samples.size() < 5001);
  const EpisodeMetrics m = measure(traj, -0.7, {});
  CHECK(m.diverged);
  CHECK_FALSE(m.success);
}

TEST_CASE("swing-up time") {
  CHECK(swingup_time(synthetic([](int) { return true; }), 0.35) == 0.0);
  CHECK_FALSE(swingup_time(synthetic([](int) { return false; }), 0.35).has_value());
  const Trajectory dip = synthetic([](int k) { return k >= 1500 && k != 2000; });
  REQUIRE(swingup_time(dip, 0.35).has_value());
  CHECK(*swingup_time(dip, 0.35) == doctest::Approx(4.002).epsilon(1e-12));
  const Trajectory late_fall = synthetic([](int k) { return k < 4999; });
  CHECK_FALSE(swingup_time(late_fall, 0.35).has_value());
}

TEST_CASE("success needs the final window above threshold") {
  const ScoreCriteria c;
  CHECK(measure(synthetic([](int k) { return k >= 4000; }), 0.35, c).success);
  CHECK_FALSE(measure(synthetic([](int k) { return k >= 4001; }), 0.35, c).success);
  CHECK_FALSE(measure(synthetic([](int k) { return k != 4500; }), 0.35, c).success);
}

TEST_CASE("performance score") {
  const ScoreCriteria c;
  SUBCASE("instant swing-up with no effort scores one") {
    CHECK(performance_score(synthetic([](int) { return true; }), 0.35, c) == 1.0);
  }
  SUBCASE("breakdown follows the documented formula") {
    EpisodeMetrics m;
    m.success = true;
    m.swingup_time = 2.5;
    m.torque_integral = 12.0;
    m.energy = 45.0;
    m.peak_torque = 3.0;
    m.peak_velocity = 10.0;
    const double want = 1 - 0.2 * (0.25 + 0.4 + 1.0 + 0.5 + 0.25);
    CHECK(performance_score(m, c) == doctest::Approx(want).epsilon(1e-14));
    double total = 0.0;
    for (const auto& p : criterion_penalties(m, c)) total += p.penalty;
    CHECK(1.0 - total == doctest::Approx(want).epsilon(1e-14));
    m.success = false;
    CHECK(performance_score(m, c) == 0.0);
  }
  SUBCASE("monotone non-increasing in every metric") {
    EpisodeMetrics base;
    base.success = true;
    base.swingup_time = 1.0;
    base.torque_integral = 5.0;
    base.energy = 5.0;
    base.peak_torque = 1.0;
    base.peak_velocity = 5.0;
    const auto with = [&](int which, double v) {
      EpisodeMetrics m = base;
      switch (which) {
        case 0: m.swingup_time = v; break;
        case 1: m.torque_integral = v; break;
        case 2: m.energy = v; break;
        case 3: m.peak_torque = v; break;
        default: m.peak_velocity = v; break;
      }
      return performance_score(m, c);
    };
    for (int which = 0; which < 5; ++which) {
      double previous = with(which, 0.0);
      for (double v = 0.01; v < 100; v *= 1.3) {
        const double score = with(which, v);
        CHECK(score <= previous);
        CHECK(score >= 0.0);
        previous = score;
      }
    }
  }
  SUBCASE("criteria are validated") {
    ScoreCriteria bad;
    bad.norm_energy = 0.0;
    CHECK_THROWS(bad.validate());
    bad = ScoreCriteria{};
    bad.weight_peak_torque = -0.1;
    CHECK_THROWS(bad.validate());
  }
}

TEST_CASE("measured metrics") {
  EpisodeSetup setup = damped_setup();
  setup.duration = 1.0;
  const Trajectory traj = run_episode(push, setup, std::nullopt, 0);
  const EpisodeMetrics m = measure(traj, 0.35, {});
  CHECK(m.torque_integral == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(m.peak_torque == 1.5);
  CHECK(m.peak_velocity > 0.0);
  double work = 0.0;
  for (std::size_t k = 1; k < traj.samples.size(); ++k)
    work += std::abs(traj.samples[k].torque.tau1 * traj.samples[k - 1].state.omega1) * kEvalDt;
  CHECK(m.energy == doctest::Approx(work).epsilon(1e-12));
}

TEST_CASE("perturbation effects") {
  EpisodeSetup setup = damped_setup();
  setup.duration = 0.2;
  SUBCASE("parameter scaling changes the simulated plant") {
    const Trajectory t = run_episode(push, setup, Perturbation{PerturbationCategory::ModelParamScale, 0.2, "m2"}, 0);
    CHECK(t.model.m2 == doctest::Approx(0.6));
    CHECK(t.model.m1 == setup.model.m1);
    CHECK_THROWS(scale_parameter(setup.model, "mass", 2.0));
  }
  SUBCASE("delay holds back actions by whole steps") {
    const Trajectory t = run_episode(push, setup, Perturbation{PerturbationCategory::TorqueDelay, 0.01}, 0);
    for (int k = 1; k <= 5; ++k) CHECK(t.samples[k].torque.tau1 == 0.0);
    CHECK(t.samples[6].torque.tau1 == 1.5);
  }
  SUBCASE("action response scales the torque") {
    const Trajectory t = run_episode(push, setup, Perturbation{PerturbationCategory::ActionResponse, 0.4}, 0);
    CHECK(t.samples[1].torque.tau1 == doctest::Approx(0.9));
  }
  SUBCASE("torque noise has the requested spread") {
    setup.duration = 10.0;
    const Trajectory t = run_episode([](const State&) { return 0.0; }, setup,
                                     Perturbation{PerturbationCategory::TorqueNoise, 0.1}, 3);
    double sum_sq = 0.0;
    for (std::size_t k = 1; k < t.samples.size(); ++k) sum_sq += t.samples[k].torque.tau1 * t.samples[k].torque.tau1;
    CHECK(std::sqrt(sum_sq / 5000) == doctest::Approx(0.3).epsilon(0.05));
    CHECK(t.samples[1].torque.tau2 == 0.0);
  }
  SUBCASE("velocity noise reaches only the controller") {
    std::vector<double> seen;
    const Controller record = [&](const State& s) {
      seen.push_back(s.omega1);
      return 0.0;
    };
    const Trajectory t = run_episode(record, setup, Perturbation{PerturbationCategory::VelocityNoise, 0.5}, 0);
    CHECK(t.samples.back().state == State{});
    CHECK(std::any_of(seen.begin(), seen.end(), [](double w) { return w != 0.0; }));
  }
  SUBCASE("the noise stream is seeded") {
    const Perturbation p{PerturbationCategory::TorqueNoise, 0.1};
    const Controller zero = [](const State&) { return 0.0; };
    CHECK(trajectory_to_csv(run_episode(zero, setup, p, 4)) == trajectory_to_csv(run_episode(zero, setup, p, 4)));
    CHECK(trajectory_to_csv(run_episode(zero, setup, p, 4)) != trajectory_to_csv(run_episode(zero, setup, p, 5)));
  }
}

TEST_CASE("robustness score") {
  const EpisodeSetup setup = easy_setup();
  const ControllerFactory factory = [](std::uint64_t) { return hold; };
  REQUIRE(measure(run_episode(hold, setup, std::nullopt, 0), setup.reward.y_threshold, {}).success);

  SUBCASE("zero magnitudes reproduce the nominal success rate") {
    std::vector<PerturbationSpec> specs;
    for (auto c : {PerturbationCategory::ModelParamScale, PerturbationCategory::VelocityNoise,
                   PerturbationCategory::TorqueNoise, PerturbationCategory::TorqueDelay,
                   PerturbationCategory::ActionResponse})
      specs.push_back({c, "m2", {0.0}, 2});
    CHECK(robustness_score(factory, setup, specs, {}, 1).score == 1.0);
  }
  SUBCASE("removing all torque gives zero") {
    const std::vector<PerturbationSpec> specs{{PerturbationCategory::ActionResponse, "", {1.0}, 3}};
    CHECK(robustness_score(factory, setup, specs, {}, 1).score == 0.0);
  }
  SUBCASE("curves cover every point and the total is the mean of the parts") {
    const auto specs = default_perturbation_suite();
    const RobustnessResult r = robustness_score(factory, setup, specs, {}, 2);
    REQUIRE(r.curves.size() == specs.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      REQUIRE(r.curves[i].points.size() == specs[i].magnitudes.size());
      double passes = 0, trials = 0;
      for (std::size_t j = 0; j < specs[i].magnitudes.size(); ++j) {
        CHECK(r.curves[i].points[j].magnitude == specs[i].magnitudes[j]);
        CHECK(r.curves[i].points[j].trials == specs[i].trials);
        passes += r.curves[i].points[j].passes;
        trials += r.curves[i].points[j].trials;
      }
      CHECK(std::abs(r.curves[i].pass_fraction - passes / trials) < 1e-12);
      mean += r.curves[i].pass_fraction / specs.size();
    }
    CHECK(std::abs(r.score - mean) < 1e-12);
    CHECK(r.score > 0.0);
  }
  SUBCASE("specs are validated") {
    CHECK_THROWS(PerturbationSpec{PerturbationCategory::TorqueNoise, "", {}, 1}.validate());
    CHECK_THROWS(PerturbationSpec{PerturbationCategory::TorqueNoise, "", {-0.1}, 1}.validate());
    CHECK_THROWS(PerturbationSpec{PerturbationCategory::TorqueNoise, "", {0.1}, 0}.validate());
  }
}

TEST_CASE("report averages the two scores") {
  const EpisodeSetup setup = easy_setup();
  const Trajectory nominal = run_episode(hold, setup, std::nullopt, 0);
  RobustnessResult rob;
  rob.score = 0.4;
  const ScoreReport r = make_report(nominal, setup.reward.y_threshold, {}, rob);
  REQUIRE(r.average.has_value());
  CHECK(*r.average == doctest::Approx((r.performance + 0.4) / 2).epsilon(1e-15));
  CHECK(r.breakdown.size() == 5);
  const ScoreReport no_rob = make_report(nominal, setup.reward.y_threshold, {}, std::nullopt);
  CHECK_FALSE(no_rob.robustness.has_value());
  CHECK_FALSE(no_rob.average.has_value());
}

TEST_CASE("perturbation category names") {
  for (auto c : {PerturbationCategory::ModelParamScale, PerturbationCategory::VelocityNoise,
                 PerturbationCategory::TorqueNoise, PerturbationCategory::TorqueDelay,
                 PerturbationCategory::ActionResponse})
    CHECK(parse_perturbation_category(to_string(c)) == c);
  CHECK_THROWS(parse_perturbation_category("wind"));
}
