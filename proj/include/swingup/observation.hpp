#pragma once

#include <array>

#include "swingup/dynamics.hpp"

namespace swingup {

inline constexpr std::size_t kObservationSize = 6;
inline constexpr double kVelocityScale = 20.0;  // rad/s

using Observation = std::array<double, kObservationSize>;

/// (cos t1, sin t1, cos t2, sin t2, w1 / 20, w2 / 20)
Observation observe(const State& s);

}  // namespace swingup
