#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "navlab/behaviors/behavior.hpp"
#include "navlab/sim/agent.hpp"

namespace navlab {

namespace detail {

// First time in [0, horizon] at which the moving gap |rel_p - t*rel_v|
// shrinks to the combined radius, or +inf. rel_p points from self to the
// neighbor, rel_v is the self velocity relative to the neighbor.
inline double time_to_collision(const Vec2& rel_p, const Vec2& rel_v, double combined_r,
                                double horizon) {
  const double c = rel_p.squaredNorm() - combined_r * combined_r;
  if (c <= 0.0) return 0.0;  // already overlapping
  const double a = rel_v.squaredNorm();
  if (a < 1e-12) return std::numeric_limits<double>::infinity();
  const double d = rel_p.dot(rel_v);
  if (d <= 0.0) return std::numeric_limits<double>::infinity();  // receding
  const double disc = d * d - a * c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double t_entry = (d - std::sqrt(disc)) / a;
  if (t_entry > horizon) return std::numeric_limits<double>::infinity();
  return t_entry;
}

}  // namespace detail

// Candidate velocity v is admissible against one neighbor if scaling the
// correction (v - v_self) by 1/c clears the plain velocity obstacle: the
// agent applies fraction c of the full avoidance effort, the neighbor is
// trusted with the rest. c = 0.5 reproduces the classic RVO apex at the
// velocity average.
inline bool rvo_candidate_feasible(const Vec2& v, const Vec2& self_pos, const Vec2& self_vel,
                                   double self_radius, const AgentState& other, double c,
                                   double horizon) {
  const Vec2 rel_p = other.position - self_pos;
  const double combined = self_radius + other.radius;
  if (rel_p.norm() <= combined) {
    // Already in contact: admissible iff strictly receding.
    return (v - other.velocity()).dot(rel_p) < 0.0;
  }
  const Vec2 v_full = self_vel + (v - self_vel) / c;
  const Vec2 rel_v = v_full - other.velocity();
  return !std::isfinite(detail::time_to_collision(rel_p, rel_v, combined, horizon));
}

// Sampled reciprocal velocity obstacle step. The candidate set is a polar
// grid aligned with the preferred direction, which makes the sampler
// equivariant under rigid rotations of the scene (the reciprocity tests rely
// on that). Returns a world-frame velocity command with |v| <= v_max.
inline Vec2 rvo_step(const AgentState& self, const Vec2& goal,
                     const std::vector<AgentState>& neighbors, double c,
                     const BehaviorParams& p, const Limits& lim, double goal_tolerance) {
  const Vec2 to_goal = goal - self.position;
  const double dist_goal = to_goal.norm();
  Vec2 preferred = Vec2::Zero();
  if (dist_goal > goal_tolerance)
    preferred = to_goal / dist_goal * std::min(p.v_pref, lim.v_max);

  const Vec2 self_vel = self.velocity();
  auto feasible = [&](const Vec2& v) {
    for (const auto& nb : neighbors)
      if (!rvo_candidate_feasible(v, self.position, self_vel, self.radius, nb, c, p.rvo_horizon))
        return false;
    return true;
  };

  if (feasible(preferred)) return preferred;

  const double theta0 =
      preferred.squaredNorm() > 0.0 ? std::atan2(preferred.y(), preferred.x()) : self.heading;
  const int n_speeds = 8;
  const int n_angles = std::max(1, p.rvo_candidates / n_speeds);

  double best_dev = std::numeric_limits<double>::infinity();
  Vec2 best = Vec2::Zero();
  bool found = false;
  for (int si = 0; si < n_speeds; ++si) {
    const double speed = lim.v_max * double(si + 1) / double(n_speeds);
    for (int ai = 0; ai < n_angles; ++ai) {
      const double ang = theta0 + 2.0 * M_PI * double(ai) / double(n_angles);
      const Vec2 cand{speed * std::cos(ang), speed * std::sin(ang)};
      const double dev = (cand - preferred).squaredNorm();
      if (dev >= best_dev) continue;  // strict improvement keeps ties deterministic
      if (feasible(cand)) {
        best_dev = dev;
        best = cand;
        found = true;
      }
    }
  }
  if (found) return best;
  return Vec2::Zero();  // nothing admissible: stop
}

}  // namespace navlab
