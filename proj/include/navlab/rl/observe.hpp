#pragma once

#include <algorithm>

#include "navlab/nn/network.hpp"
#include "navlab/sim/world.hpp"

namespace navlab {

// Ego row: [d_g, p - g (2), v_ref, psi, r]; neighbor rows:
// [p_i (2), v_i (2), r_i, d_i, r_i + r]. Distances are recomputed here, never
// cached. Neighbors are ordered farthest first so the recurrent summary ends
// on the nearest agent.
inline Observation make_observation(const AgentState& ego, const Vec2& goal,
                                    const std::vector<OtherAgent>& others, double v_ref) {
  Observation obs;
  obs.ego.resize(6);
  const Vec2 rel = ego.position - goal;
  obs.ego << rel.norm(), rel.x(), rel.y(), v_ref, ego.heading, ego.radius;

  std::vector<int> order(others.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(others.size());
  for (std::size_t i = 0; i < others.size(); ++i)
    dist[i] = (ego.position - others[i].state.position).norm();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] > dist[b]; });

  obs.neighbors.reserve(others.size());
  for (int idx : order) {
    const AgentState& s = others[idx].state;
    Eigen::VectorXd row(7);
    const Vec2 vel = s.velocity();
    row << s.position.x(), s.position.y(), vel.x(), vel.y(), s.radius, dist[idx],
        s.radius + ego.radius;
    obs.neighbors.push_back(std::move(row));
  }
  return obs;
}

inline Observation make_observation(const World& w) {
  return make_observation(w.ego, w.ego_goal, w.others, w.params.limits.v_max);
}

}  // namespace navlab
