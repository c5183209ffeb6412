#pragma once

#include <span>
#include <vector>

namespace swingup {

/// Adam with bias correction, operating on a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

  double learning_rate() const { return lr_; }
  long long steps() const { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace swingup
