#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "swingup/rng.hpp"

namespace swingup {

struct Transition {
  std::vector<double> observation;
  double action = 0.0;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool done = false;  // true only for terminal states; time-limit truncation is not terminal
};

/// Column-per-sample minibatch.
struct Batch {
  Eigen::MatrixXd observations;       // obs_dim x B
  Eigen::MatrixXd actions;            // 1 x B
  Eigen::VectorXd rewards;            // B
  Eigen::MatrixXd next_observations;  // obs_dim x B
  Eigen::VectorXd dones;              // B, 0 or 1

  Eigen::Index size() const { return rewards.size(); }
};

/// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t observation_size);

  void add(std::span<const double> observation, double action, double reward,
           std::span<const double> next_observation, bool done);
  void add(const Transition& t) { add(t.observation, t.action, t.reward, t.next_observation, t.done); }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t observation_size() const { return obs_size_; }

  Transition at(std::size_t index) const;

  /// Uniform sampling with replacement. Throws std::length_error when empty.
  Batch sample(std::size_t batch_size, Rng& rng) const;
  Batch gather(std::span<const std::size_t> indices) const;

 private:
  std::size_t capacity_;
  std::size_t obs_size_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> observations_;
  std::vector<double> next_observations_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<unsigned char> dones_;
};

}  // namespace swingup
