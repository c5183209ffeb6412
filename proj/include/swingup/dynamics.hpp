#pragma once

#include <string_view>

namespace swingup {

enum class Actuation { Acrobot, Pendubot };

std::string_view to_string(Actuation setting);
Actuation parse_actuation(std::string_view name);

/// Joint angles (theta1 from hanging-down vertical, theta2 relative to link 1)
/// and angular velocities. Angles are kept unwrapped.
struct State {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;

  bool finite() const;
  bool operator==(const State&) const = default;
};

/// Physical parameters of the two-link pendulum. Inertias are about the joints.
struct ModelParams {
  double m1 = 0.5, m2 = 0.5;
  double l1 = 0.3, l2 = 0.3;
  double r1 = 0.15, r2 = 0.15;
  double I1 = 0.015, I2 = 0.015;
  double b1 = 0.001, b2 = 0.001;
  double cf1 = 0.0, cf2 = 0.0;
  double g = 9.81;
  double tau_max = 3.0;
  Actuation setting = Actuation::Pendubot;

  /// Repo default plant: two 0.5 kg, 0.3 m uniform rods with a light damping term.
  static ModelParams defaults(Actuation setting);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct TorquePair {
  double tau1 = 0.0;
  double tau2 = 0.0;
  bool operator==(const TorquePair&) const = default;
};

struct Accelerations {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

/// Symmetric 2x2 inertia matrix M(q); depends on the elbow angle only.
struct MassMatrix {
  double m11, m12, m22;
};

/// Smoothing velocity of the Coulomb friction term tanh(omega / eps).
inline constexpr double kFrictionSmoothing = 1e-2;

/// Maps a normalized action in [-1, 1] onto the actuated joint. Out-of-range
/// actions are clamped; non-finite actions throw std::invalid_argument.
TorquePair apply_actuation(double action, const ModelParams& params);

MassMatrix mass_matrix(double theta2, const ModelParams& params);

/// Solves M(q) qdd = tau - C(q, qd) qd + G(q) - F(qd).
Accelerations forward_dynamics(const State& s, const TorquePair& tau, const ModelParams& params);

/// One classical RK4 step with the torque held constant over the step.
State step_torque(const State& s, const TorquePair& tau, double dt, const ModelParams& params);
State step(const State& s, double action, double dt, const ModelParams& params);

double kinetic_energy(const State& s, const ModelParams& params);
/// Zero at the hanging rest configuration.
double potential_energy(const State& s, const ModelParams& params);
double total_energy(const State& s, const ModelParams& params);

/// Tip height above the base pivot: -(l1+l2) hanging, +(l1+l2) upright.
double end_effector_height(const State& s, const ModelParams& params);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);
State normalized(const State& s);

}  // namespace swingup
