#include "swingup/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace swingup {

std::string_view to_string(Actuation setting) {
  return setting == Actuation::Acrobot ? "acrobot" : "pendubot";
}

Actuation parse_actuation(std::string_view name) {
  if (name == "acrobot") return Actuation::Acrobot;
  if (name == "pendubot") return Actuation::Pendubot;
  throw std::invalid_argument("unknown actuation setting '" + std::string(name) +
                              "' (expected acrobot or pendubot)");
}

bool State::finite() const {
  return std::isfinite(theta1) && std::isfinite(theta2) && std::isfinite(omega1) &&
         std::isfinite(omega2);
}

ModelParams ModelParams::defaults(Actuation setting) {
  ModelParams p;
  p.setting = setting;
  return p;
}

namespace {

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw std::invalid_argument(std::string("ModelParams.") + field + " must be " + rule);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(m1) && m1 > 0, "m1", "> 0");
  require(std::isfinite(m2) && m2 > 0, "m2", "> 0");
  require(std::isfinite(l1) && l1 > 0, "l1", "> 0");
  require(std::isfinite(l2) && l2 > 0, "l2", "> 0");
  require(std::isfinite(r1) && r1 > 0 && r1 <= l1, "r1", "in (0, l1]");
  require(std::isfinite(r2) && r2 > 0 && r2 <= l2, "r2", "in (0, l2]");
  require(std::isfinite(I1) && I1 > 0, "I1", "> 0");
  // Link 2's inertia about its own centre of mass, I2 - m2 r2^2, cannot be
  // negative; this also keeps M(q) positive definite for every q.
  require(std::isfinite(I2) && I2 > 0 && I2 >= m2 * r2 * r2, "I2", ">= m2 * r2^2");
  require(std::isfinite(b1) && b1 >= 0, "b1", ">= 0");
  require(std::isfinite(b2) && b2 >= 0, "b2", ">= 0");
  require(std::isfinite(cf1) && cf1 >= 0, "cf1", ">= 0");
  require(std::isfinite(cf2) && cf2 >= 0, "cf2", ">= 0");
  require(std::isfinite(g) && g > 0, "g", "> 0");
  require(std::isfinite(tau_max) && tau_max > 0, "tau_max", "> 0");
}

TorquePair apply_actuation(double action, const ModelParams& params) {
  if (!std::isfinite(action)) throw std::invalid_argument("invalid action: not finite");
  const double tau = std::clamp(action, -1.0, 1.0) * params.tau_max;
  if (params.setting == Actuation::Acrobot) return {0.0, tau};
  return {tau, 0.0};
}

MassMatrix mass_matrix(double theta2, const ModelParams& p) {
  const double coupling = p.m2 * p.l1 * p.r2 * std::cos(theta2);
  return {p.I1 + p.I2 + p.m2 * p.l1 * p.l1 + 2.0 * coupling, p.I2 + coupling, p.I2};
}

Accelerations forward_dynamics(const State& s, const TorquePair& tau, const ModelParams& p) {
  const MassMatrix m = mass_matrix(s.theta2, p);
  const double h = p.m2 * p.l1 * p.r2 * std::sin(s.theta2);

  // Coriolis / centrifugal terms C(q, qd) qd
  const double c1 = -2.0 * h * s.omega1 * s.omega2 - h * s.omega2 * s.omega2;
  const double c2 = h * s.omega1 * s.omega1;

  // Gravity torques G(q)
  const double s1 = std::sin(s.theta1);
  const double s12 = std::sin(s.theta1 + s.theta2);
  const double g1 = -p.m1 * p.g * p.r1 * s1 - p.m2 * p.g * (p.l1 * s1 + p.r2 * s12);
  const double g2 = -p.m2 * p.g * p.r2 * s12;

  const double f1 = p.b1 * s.omega1 + p.cf1 * std::tanh(s.omega1 / kFrictionSmoothing);
  const double f2 = p.b2 * s.omega2 + p.cf2 * std::tanh(s.omega2 / kFrictionSmoothing);

  const double rhs1 = tau.tau1 - c1 + g1 - f1;
  const double rhs2 = tau.tau2 - c2 + g2 - f2;

  const double det = m.m11 * m.m22 - m.m12 * m.m12;
  return {(m.m22 * rhs1 - m.m12 * rhs2) / det, (m.m11 * rhs2 - m.m12 * rhs1) / det};
}

namespace {

struct Derivative {
  double dtheta1, dtheta2, domega1, domega2;
};

Derivative derivative(const State& s, const TorquePair& tau, const ModelParams& p) {
  const Accelerations acc = forward_dynamics(s, tau, p);
  return {s.omega1, s.omega2, acc.alpha1, acc.alpha2};
}

State advance(const State& s, const Derivative& d, double h) {
  return {s.theta1 + h * d.dtheta1, s.theta2 + h * d.dtheta2, s.omega1 + h * d.domega1,
          s.omega2 + h * d.domega2};
}

}  // namespace

State step_torque(const State& s, const TorquePair& tau, double dt, const ModelParams& params) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be >= 0");
  if (dt == 0.0) return s;
  const Derivative k1 = derivative(s, tau, params);
  const Derivative k2 = derivative(advance(s, k1, 0.5 * dt), tau, params);
  const Derivative k3 = derivative(advance(s, k2, 0.5 * dt), tau, params);
  const Derivative k4 = derivative(advance(s, k3, dt), tau, params);
  const double w = dt / 6.0;
  return {s.theta1 + w * (k1.dtheta1 + 2.0 * k2.dtheta1 + 2.0 * k3.dtheta1 + k4.dtheta1),
          s.theta2 + w * (k1.dtheta2 + 2.0 * k2.dtheta2 + 2.0 * k3.dtheta2 + k4.dtheta2),
          s.omega1 + w * (k1.domega1 + 2.0 * k2.domega1 + 2.0 * k3.domega1 + k4.domega1),
          s.omega2 + w * (k1.domega2 + 2.0 * k2.domega2 + 2.0 * k3.domega2 + k4.domega2)};
}

State step(const State& s, double action, double dt, const ModelParams& params) {
  return step_torque(s, apply_actuation(action, params), dt, params);
}

double kinetic_energy(const State& s, const ModelParams& params) {
  const MassMatrix m = mass_matrix(s.theta2, params);
  return 0.5 * (m.m11 * s.omega1 * s.omega1 + 2.0 * m.m12 * s.omega1 * s.omega2 +
                m.m22 * s.omega2 * s.omega2);
}

double potential_energy(const State& s, const ModelParams& p) {
  const double c1 = std::cos(s.theta1);
  const double c12 = std::cos(s.theta1 + s.theta2);
  return p.g * (p.m1 * p.r1 * (1.0 - c1) + p.m2 * (p.l1 * (1.0 - c1) + p.r2 * (1.0 - c12)));
}

double total_energy(const State& s, const ModelParams& params) {
  return kinetic_energy(s, params) + potential_energy(s, params);
}

double end_effector_height(const State& s, const ModelParams& p) {
  return -p.l1 * std::cos(s.theta1) - p.l2 * std::cos(s.theta1 + s.theta2);
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, two_pi);
  if (wrapped > std::numbers::pi) wrapped -= two_pi;
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return wrapped;
}

State normalized(const State& s) {
  return {wrap_angle(s.theta1), wrap_angle(s.theta2), s.omega1, s.omega2};
}

}  // namespace swingup
