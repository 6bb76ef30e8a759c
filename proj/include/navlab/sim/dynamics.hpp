#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "navlab/sim/agent.hpp"

namespace navlab {

// Second-order unicycle: xdot = v cos psi, ydot = v sin psi, psidot = omega,
// vdot = u_a, omegadot = u_alpha.
inline StateVec unicycle_deriv(const StateVec& x, const ControlInput& u) {
  StateVec d;
  d << x(3) * std::cos(x(2)), x(3) * std::sin(x(2)), x(4), u.linear_accel, u.angular_accel;
  return d;
}

// One RK4 step of the smooth model. No clamping, no angle wrapping; this is
// the map the MPC differentiates through.
inline StateVec rk4_step(const StateVec& x, const ControlInput& u, double tau) {
  const StateVec k1 = unicycle_deriv(x, u);
  const StateVec k2 = unicycle_deriv(x + 0.5 * tau * k1, u);
  const StateVec k3 = unicycle_deriv(x + 0.5 * tau * k2, u);
  const StateVec k4 = unicycle_deriv(x + tau * k3, u);
  return x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

using StateJac = Eigen::Matrix<double, 5, 5>;
using ControlJac = Eigen::Matrix<double, 5, 2>;

namespace detail {

inline StateJac deriv_jac_x(const StateVec& x) {
  StateJac J = StateJac::Zero();
  const double c = std::cos(x(2)), s = std::sin(x(2));
  J(0, 2) = -x(3) * s;
  J(0, 3) = c;
  J(1, 2) = x(3) * c;
  J(1, 3) = s;
  J(2, 4) = 1.0;
  return J;
}

inline ControlJac deriv_jac_u() {
  ControlJac J = ControlJac::Zero();
  J(3, 0) = 1.0;
  J(4, 1) = 1.0;
  return J;
}

}  // namespace detail

// RK4 step together with exact Jacobians of the step map,
// A = d x_next / d x and B = d x_next / d u (forward accumulation).
inline StateVec rk4_step_jac(const StateVec& x, const ControlInput& u, double tau, StateJac& A,
                             ControlJac& B) {
  const ControlJac Ju = detail::deriv_jac_u();
  const StateJac I = StateJac::Identity();

  const StateVec k1 = unicycle_deriv(x, u);
  const StateJac K1x = detail::deriv_jac_x(x);
  const ControlJac K1u = Ju;

  const StateVec x2 = x + 0.5 * tau * k1;
  const StateVec k2 = unicycle_deriv(x2, u);
  const StateJac J2 = detail::deriv_jac_x(x2);
  const StateJac K2x = J2 * (I + 0.5 * tau * K1x);
  const ControlJac K2u = J2 * (0.5 * tau * K1u) + Ju;

  const StateVec x3 = x + 0.5 * tau * k2;
  const StateVec k3 = unicycle_deriv(x3, u);
  const StateJac J3 = detail::deriv_jac_x(x3);
  const StateJac K3x = J3 * (I + 0.5 * tau * K2x);
  const ControlJac K3u = J3 * (0.5 * tau * K2u) + Ju;

  const StateVec x4 = x + tau * k3;
  const StateVec k4 = unicycle_deriv(x4, u);
  const StateJac J4 = detail::deriv_jac_x(x4);
  const StateJac K4x = J4 * (I + tau * K3x);
  const ControlJac K4u = J4 * (tau * K3u) + Ju;

  A = I + (tau / 6.0) * (K1x + 2.0 * K2x + 2.0 * K3x + K4x);
  B = (tau / 6.0) * (K1u + 2.0 * K2u + 2.0 * K3u + K4u);
  return x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Simulator step: clamp the input to U, integrate, clamp v and omega to S,
// normalize heading to (-pi, pi].
inline AgentState step_dynamics(const AgentState& s, const ControlInput& u, double tau,
                                const Limits& lim) {
  const ControlInput uc = u.clamped(lim);
  StateVec x = rk4_step(s.control_state(), uc, tau);
  x(2) = wrap_angle(x(2));
  x(3) = std::clamp(x(3), -lim.v_max, lim.v_max);
  x(4) = std::clamp(x(4), -lim.omega_max, lim.omega_max);
  return AgentState::from_control_state(x, s.radius);
}

}  // namespace navlab
