#pragma once

#include <cmath>

#include "navlab/behaviors/behavior.hpp"
#include "navlab/sim/agent.hpp"

namespace navlab {

namespace detail {

inline Vec2 clamp_speed(const Vec2& v, double v_max) {
  const double n = v.norm();
  return n > v_max ? Vec2(v * (v_max / n)) : v;
}

}  // namespace detail

// Straight toward the goal at the preferred speed; ignores every other agent.
inline Vec2 const_vel_step(const AgentState& self, const Vec2& goal, const BehaviorParams& p,
                           const Limits& lim, double goal_tolerance) {
  const Vec2 to_goal = goal - self.position;
  const double d = to_goal.norm();
  if (d <= goal_tolerance) return Vec2::Zero();
  return to_goal / d * std::min(p.v_pref, lim.v_max);
}

// Base velocity toward the goal plus a lateral component A*2*pi*f*cos(2*pi*f*t)
// perpendicular to the goal direction; the integrated path is a sinusoid of
// amplitude A about the straight line to the goal.
inline Vec2 sinusoid_step(const AgentState& self, const Vec2& goal, double freq, double amplitude,
                          double t_seconds, const BehaviorParams& p, const Limits& lim,
                          double goal_tolerance) {
  const Vec2 to_goal = goal - self.position;
  const double d = to_goal.norm();
  if (d <= goal_tolerance) return Vec2::Zero();
  const Vec2 dir = to_goal / d;
  const Vec2 perp{-dir.y(), dir.x()};
  const double w = 2.0 * M_PI * freq;
  const Vec2 v = dir * std::min(p.v_pref, lim.v_max) + perp * (amplitude * w * std::cos(w * t_seconds));
  return detail::clamp_speed(v, lim.v_max);
}

// Tangential motion on the circle about `center`, with a radial term pulling
// back to the nominal radius so integration error does not accumulate.
inline Vec2 circular_step(const AgentState& self, const Vec2& center, double radius, double speed,
                          int direction, const Limits& lim) {
  const Vec2 rel = self.position - center;
  const double d = rel.norm();
  Vec2 radial;
  if (d > 1e-9) {
    radial = rel / d;
  } else {
    radial = {std::cos(self.heading), std::sin(self.heading)};
  }
  const Vec2 tangent = direction >= 0 ? Vec2{-radial.y(), radial.x()} : Vec2{radial.y(), -radial.x()};
  const double k_radial = 2.0;  // [1/s]; holds drift well under 2% at 0.1 s steps
  const Vec2 v = tangent * speed + radial * (k_radial * (radius - d));
  return detail::clamp_speed(v, lim.v_max);
}

}  // namespace navlab
