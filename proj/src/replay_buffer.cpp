#include "swingup/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swingup {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t observation_size)
    : capacity_(capacity), obs_size_(observation_size) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be > 0");
  observations_.reserve(std::min<std::size_t>(capacity, 1 << 16) * obs_size_);
}

void ReplayBuffer::add(std::span<const double> observation, double action, double reward,
                       std::span<const double> next_observation, bool done) {
  if (observation.size() != obs_size_ || next_observation.size() != obs_size_)
    throw std::invalid_argument("transition observation size mismatch");
  if (!std::isfinite(action) || action < -1.0 || action > 1.0 || !std::isfinite(reward))
    throw std::invalid_argument("transition action must be finite in [-1, 1] and reward finite");

  if (size_ < capacity_) {
    observations_.insert(observations_.end(), observation.begin(), observation.end());
    next_observations_.insert(next_observations_.end(), next_observation.begin(),
                              next_observation.end());
    actions_.push_back(action);
    rewards_.push_back(reward);
    dones_.push_back(done ? 1 : 0);
    ++size_;
  } else {
    std::copy(observation.begin(), observation.end(), observations_.begin() + cursor_ * obs_size_);
    std::copy(next_observation.begin(), next_observation.end(),
              next_observations_.begin() + cursor_ * obs_size_);
    actions_[cursor_] = action;
    rewards_[cursor_] = reward;
    dones_[cursor_] = done ? 1 : 0;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

Transition ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("replay buffer index out of range");
  const auto obs = observations_.begin() + index * obs_size_;
  const auto next = next_observations_.begin() + index * obs_size_;
  return {{obs, obs + obs_size_}, actions_[index], rewards_[index], {next, next + obs_size_},
          dones_[index] != 0};
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const auto d = static_cast<Eigen::Index>(obs_size_);
  Batch b{Eigen::MatrixXd(d, n), Eigen::MatrixXd(1, n), Eigen::VectorXd(n), Eigen::MatrixXd(d, n),
          Eigen::VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t i = indices[static_cast<std::size_t>(j)];
    if (i >= size_) throw std::out_of_range("replay buffer index out of range");
    for (Eigen::Index k = 0; k < d; ++k) {
      b.observations(k, j) = observations_[i * obs_size_ + static_cast<std::size_t>(k)];
      b.next_observations(k, j) = next_observations_[i * obs_size_ + static_cast<std::size_t>(k)];
    }
    b.actions(0, j) = actions_[i];
    b.rewards(j) = rewards_[i];
    b.dones(j) = dones_[i];
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw std::length_error("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.index(size_));
  return gather(idx);
}

}  // namespace swingup
