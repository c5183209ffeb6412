#include "swingup/observation.hpp"

#include <cmath>

namespace swingup {

Observation observe(const State& s) {
  return {std::cos(s.theta1), std::sin(s.theta1), std::cos(s.theta2),
          std::sin(s.theta2), s.omega1 / kVelocityScale, s.omega2 / kVelocityScale};
}

}  // namespace swingup
