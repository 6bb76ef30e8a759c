#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "navlab/core/config.hpp"

namespace navlab {

using Vec2 = Eigen::Vector2d;
using StateVec = Eigen::Matrix<double, 5, 1>;  // [x, y, psi, v, omega]

// Wrap into (-pi, pi].
inline double wrap_angle(double psi) {
  double w = std::remainder(psi, 2.0 * M_PI);
  if (w <= -M_PI) w = M_PI;
  return w;
}

// Admissible sets U and S for the ego agent.
struct Limits {
  double v_max = 1.5;
  double omega_max = 2.0;
  double a_max = 2.0;
  double alpha_max = 4.0;

  static Limits from_config(const Config& c) {
    Limits l;
    l.v_max = c.get_double("v_max");
    l.omega_max = c.get_double("omega_max");
    l.a_max = c.get_double("a_max");
    l.alpha_max = c.get_double("alpha_max");
    return l;
  }
};

struct AgentState {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;        // psi, kept in (-pi, pi]
  double forward_velocity = 0.0;
  double angular_velocity = 0.0;
  double radius = 0.3;

  Vec2 velocity() const {
    return {forward_velocity * std::cos(heading), forward_velocity * std::sin(heading)};
  }

  StateVec control_state() const {
    StateVec x;
    x << position.x(), position.y(), heading, forward_velocity, angular_velocity;
    return x;
  }

  // Keeps radius; the kinematic part comes from the control-state vector.
  static AgentState from_control_state(const StateVec& x, double radius) {
    AgentState s;
    s.position = {x(0), x(1)};
    s.heading = x(2);
    s.forward_velocity = x(3);
    s.angular_velocity = x(4);
    s.radius = radius;
    return s;
  }
};

struct ControlInput {
  double linear_accel = 0.0;   // u_a
  double angular_accel = 0.0;  // u_alpha

  ControlInput clamped(const Limits& lim) const {
    return {std::clamp(linear_accel, -lim.a_max, lim.a_max),
            std::clamp(angular_accel, -lim.alpha_max, lim.alpha_max)};
  }
};

}  // namespace navlab
