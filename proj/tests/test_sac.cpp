#include "doctest.h"

#include <set>
#include <numbers>

#include "oracles.hpp"
#include "swingup/gaussian_policy.hpp"
#include "swingup/replay_buffer.hpp"
#include "swingup/rng.hpp"
#include "swingup/sac.hpp"

using namespace swingup;

namespace {

SacConfig small_config() {
  SacConfig cfg;
  cfg.hidden_width = 16;
  cfg.hidden_layers = 2;
  cfg.batch_size = 8;
  return cfg;
}

std::vector<double> random_obs(Rng& rng) {
  std::vector<double> o(kObservationSize);
  for (double& x : o) x = rng.uniform(-1, 1);
  return o;
}

ReplayBuffer random_buffer(std::size_t n, Rng& rng, bool done = false) {
  ReplayBuffer buffer(n, kObservationSize);
  for (std::size_t i = 0; i < n; ++i)
    buffer.add(random_obs(rng), rng.uniform(-1, 1), rng.normal(), random_obs(rng), done);
  return buffer;
}

}  // namespace

TEST_CASE("replay buffer is a ring") {
  ReplayBuffer buffer(3, 2);
  for (int i = 0; i < 5; ++i)
    buffer.add(std::vector<double>{double(i), 0.0}, 0.1 * i, double(i), std::vector<double>{0.0, double(i)}, i == 4);
  CHECK(buffer.size() == 3);
  std::multiset<double> rewards;
  for (std::size_t i = 0; i < 3; ++i) {
    const Transition t = buffer.at(i);
    rewards.insert(t.reward);
    CHECK(t.observation[0] == t.reward);
    CHECK(t.next_observation[1] == t.reward);
    CHECK(t.done == (t.reward == 4.0));
  }
  CHECK(rewards == std::multiset<double>{2.0, 3.0, 4.0});
  CHECK_THROWS(buffer.add(std::vector<double>{1.0}, 0.0, 0.0, std::vector<double>{1.0, 2.0}, false));
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer buffer(100, 1);
  for (int i = 0; i < 100; ++i) buffer.add(std::vector<double>{double(i)}, 0.0, double(i), std::vector<double>{0.0}, false);
  Rng rng(1);
  std::vector<int> counts(100, 0);
  const int draws = 100000;
  for (int k = 0; k < draws / 250; ++k) {
    const Batch b = buffer.sample(250, rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) counts[static_cast<int>(b.rewards(i))]++;
  }
  const double expected = draws / 100.0;
  const double sd = std::sqrt(draws * 0.01 * 0.99);
  for (int c : counts) CHECK(std::abs(c - expected) < 5 * sd);

  ReplayBuffer empty(4, 1);
  CHECK_THROWS_AS(empty.sample(2, rng), std::length_error);
}

TEST_CASE("critic targets") {
  Rng rng(2);
  const SacConfig cfg = small_config();
  SacAgent agent(cfg, 3);
  const SacNetworks& n = agent.networks();
  const ReplayBuffer buffer = random_buffer(6, rng);
  std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  Batch batch = buffer.gather(all);
  Eigen::MatrixXd noise(1, 6);
  for (Eigen::Index i = 0; i < 6; ++i) noise(0, i) = rng.normal();

  SUBCASE("terminal transitions do not bootstrap") {
    batch.dones.setOnes();
    const Eigen::VectorXd y = critic_targets(batch, n.policy, n.q_arch, n.q1_target, n.q2_target, 0.2, 0.99, noise);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(y(i) == batch.rewards(i));
  }
  SUBCASE("zero discount") {
    const Eigen::VectorXd y = critic_targets(batch, n.policy, n.q_arch, n.q1_target, n.q2_target, 0.2, 0.0, noise);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(y(i) == batch.rewards(i));
  }
  SUBCASE("manual computation") {
    const double alpha = 0.37, gamma = 0.9;
    const Eigen::VectorXd y = critic_targets(batch, n.policy, n.q_arch, n.q1_target, n.q2_target, alpha, gamma, noise);
    for (Eigen::Index i = 0; i < 6; ++i) {
      std::vector<double> next(batch.next_observations.col(i).data(), batch.next_observations.col(i).data() + 6);
      const auto out = oracle::reference_forward(n.policy.arch, n.policy.params, next);
      const double log_std = std::clamp(out[1], -20.0, 2.0);
      const double u = out[0] + std::exp(log_std) * noise(0, i);
      const double a = std::tanh(u);
      const double log_prob = -0.5 * noise(0, i) * noise(0, i) - log_std - 0.5 * std::log(2 * std::numbers::pi) -
                              std::log(1 - a * a + 1e-6);
      next.push_back(a);
      const double q1 = oracle::reference_forward(n.q_arch, n.q1_target, next)[0];
      const double q2 = oracle::reference_forward(n.q_arch, n.q2_target, next)[0];
      const double want = batch.rewards(i) + gamma * (std::min(q1, q2) - alpha * log_prob);
      CHECK(y(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("the twin minimum never exceeds either critic") {
    batch.rewards.setZero();
    const Eigen::VectorXd y = critic_targets(batch, n.policy, n.q_arch, n.q1_target, n.q2_target, 0.0, 1.0, noise);
    for (Eigen::Index i = 0; i < 6; ++i) {
      std::vector<double> next(batch.next_observations.col(i).data(), batch.next_observations.col(i).data() + 6);
      const auto out = oracle::reference_forward(n.policy.arch, n.policy.params, next);
      next.push_back(std::tanh(out[0] + std::exp(std::clamp(out[1], -20.0, 2.0)) * noise(0, i)));
      CHECK(y(i) <= oracle::reference_forward(n.q_arch, n.q1_target, next)[0] + 1e-12);
      CHECK(y(i) <= oracle::reference_forward(n.q_arch, n.q2_target, next)[0] + 1e-12);
    }
  }
}

TEST_CASE("polyak averaging") {
  std::vector<double> target{1.0, 2.0, 3.0};
  const std::vector<double> online{5.0, -1.0, 0.5};
  polyak_update(target, online, 0.0);
  CHECK(target == std::vector<double>{1.0, 2.0, 3.0});
  polyak_update(target, online, 1.0);
  CHECK(target == online);
  std::vector<double> mid{0.0, 0.0, 0.0};
  polyak_update(mid, online, 0.25);
  CHECK(mid[0] == doctest::Approx(1.25));
}

TEST_CASE("update step target synchronisation") {
  Rng rng(4);
  const ReplayBuffer buffer = random_buffer(32, rng);
  SUBCASE("tau = 1 copies the online critics") {
    SacConfig cfg = small_config();
    cfg.polyak_tau = 1.0;
    SacAgent agent(cfg, 5);
    agent.update_step(buffer, rng);
    CHECK(agent.networks().q1_target == agent.networks().q1);
    CHECK(agent.networks().q2_target == agent.networks().q2);
  }
  SUBCASE("tau = 0 freezes the targets") {
    SacConfig cfg = small_config();
    cfg.polyak_tau = 0.0;
    SacAgent agent(cfg, 5);
    const FlatParams before = agent.networks().q1_target;
    agent.update_step(buffer, rng);
    CHECK(agent.networks().q1_target == before);
    CHECK(agent.networks().q1 != before);
  }
  SUBCASE("a buffer smaller than the batch is rejected") {
    SacConfig cfg = small_config();
    cfg.batch_size = 64;
    SacAgent agent(cfg, 5);
    CHECK_THROWS_AS(agent.update_step(buffer, rng), InsufficientBufferError);
  }
}

TEST_CASE("critics fit a single transition") {
  Rng rng(6);
  ReplayBuffer buffer(1, kObservationSize);
  buffer.add(random_obs(rng), 0.3, 1.7, random_obs(rng), true);
  SacConfig cfg = small_config();
  cfg.batch_size = 1;
  SacAgent agent(cfg, 7);
  LossReport report;
  for (int i = 0; i < 3000; ++i) report = agent.update_step(buffer, rng);
  CHECK(report.q1_loss < 1e-6);
  CHECK(report.q2_loss < 1e-6);
}

TEST_CASE("temperature tuning drives entropy to the target") {
  Rng rng(8);
  ReplayBuffer buffer(512, kObservationSize);
  for (int i = 0; i < 512; ++i) {
    const double a = rng.uniform(-1, 1);
    buffer.add(random_obs(rng), a, -a * a, random_obs(rng), true);
  }
  SacConfig cfg = small_config();
  cfg.hidden_width = 32;
  cfg.batch_size = 64;
  SacAgent agent(cfg, 9);
  double entropy = 0.0;
  const int steps = 6000, tail = 1000;
  for (int i = 0; i < steps; ++i) {
    const LossReport r = agent.update_step(buffer, rng);
    if (i >= steps - tail) entropy += r.mean_entropy / tail;
  }
  CHECK(std::abs(entropy - cfg.target_entropy) < 0.3);
}

TEST_CASE("fixed temperature stays fixed") {
  Rng rng(10);
  const ReplayBuffer buffer = random_buffer(32, rng);
  SacConfig cfg = small_config();
  cfg.auto_entropy = false;
  cfg.ent_alpha = 0.05;
  SacAgent agent(cfg, 11);
  for (int i = 0; i < 10; ++i) agent.update_step(buffer, rng);
  CHECK(agent.ent_alpha() == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("updates are deterministic") {
  const auto run = [] {
    Rng rng(12);
    const ReplayBuffer buffer = random_buffer(64, rng);
    SacAgent agent(small_config(), 13);
    for (int i = 0; i < 20; ++i) agent.update_step(buffer, rng);
    return serialize_checkpoint(agent.checkpoint(13, {}));
  };
  CHECK(run() == run());
}

TEST_CASE("config validation") {
  SacConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.substeps() == 5);
  cfg.gamma = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = SacConfig{};
  cfg.polyak_tau = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = SacConfig{};
  cfg.control_hz = 300.0;
  CHECK_THROWS(cfg.validate());
  cfg = SacConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("checkpoint holds the policy and both critics with their targets") {
  SacAgent agent(small_config(), 14);
  const PolicyCheckpoint cp = agent.checkpoint(14, {{"stage", "sac"}});
  for (const char* name : {"policy", "q1", "q2", "q1_target", "q2_target"}) CHECK(cp.find(name) != nullptr);
  CHECK(cp.policy().params == agent.networks().policy.params);
}
