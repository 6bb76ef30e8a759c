#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "navlab/behaviors/behavior.hpp"
#include "navlab/behaviors/rvo.hpp"
#include "navlab/behaviors/scripted.hpp"
#include "navlab/sim/dynamics.hpp"

namespace navlab {

struct NoNeighbors : std::runtime_error {
  NoNeighbors() : std::runtime_error("world has no other agents") {}
};

struct SimParams {
  double tau = 0.1;
  Limits limits;
  double agent_radius = 0.3;
  double goal_tolerance = 0.2;
  double arena_radius = 6.0;
  double spawn_margin = 0.5;
  double goal_min_dist = 2.0;
  int spawn_retries = 200;
  double timeout_factor = 3.0;
  int timeout_min_steps = 200;
  int max_agents = 16;
  BehaviorParams behavior;

  static SimParams from_config(const Config& c) {
    SimParams p;
    p.tau = c.get_double("tau");
    p.limits = Limits::from_config(c);
    p.agent_radius = c.get_double("agent_radius");
    p.goal_tolerance = c.get_double("goal_tolerance");
    p.arena_radius = c.get_double("arena_radius");
    p.spawn_margin = c.get_double("spawn_margin");
    p.goal_min_dist = c.get_double("goal_min_dist");
    p.spawn_retries = c.get_int("spawn_retries");
    p.timeout_factor = c.get_double("timeout_factor");
    p.timeout_min_steps = c.get_int("timeout_min_steps");
    p.max_agents = c.get_int("max_agents");
    p.behavior = BehaviorParams::from_config(c);
    return p;
  }
};

enum class ScenarioKind { SymmetricSwap, AsymmetricSwap, PairwiseSwap, Random };

struct OtherAgent {
  AgentState state;
  Vec2 goal{0.0, 0.0};
  Vec2 anchor{0.0, 0.0};  // spawn position; center of circular motion
  BehaviorTag behavior;
};

enum class EventKind { GoalReached, Collision, Timeout };

struct EpisodeEvent {
  EventKind kind = EventKind::Timeout;
  int agent_index = -1;  // colliding neighbor for Collision
  int at_step = 0;
};

struct World {
  AgentState ego;
  Vec2 ego_goal{0.0, 0.0};
  std::vector<OtherAgent> others;
  SimParams params;
  ScenarioKind kind = ScenarioKind::Random;
  int clock = 0;
  int timeout_steps = 200;
  std::uint64_t seed = 0;

  double time_seconds() const { return clock * params.tau; }
};

inline double min_agent_distance(const World& w) {
  if (w.others.empty()) throw NoNeighbors();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : w.others) best = std::min(best, (w.ego.position - o.state.position).norm());
  return best;
}

// Timeout budget: timeout_factor x the straight-line time at v_max, with a
// floor of timeout_min_steps.
inline int timeout_budget(const Vec2& start, const Vec2& goal, const SimParams& p) {
  const double straight = (goal - start).norm() / p.limits.v_max;
  const int steps = static_cast<int>(std::ceil(p.timeout_factor * straight / p.tau));
  return std::max(steps, p.timeout_min_steps);
}

// Velocity command for non-ego agent `idx` from its assigned behavior,
// evaluated on the current world snapshot.
inline Vec2 behavior_command(const World& w, std::size_t idx) {
  const OtherAgent& a = w.others[idx];
  switch (a.behavior.kind) {
    case BehaviorKind::Rvo: {
      std::vector<AgentState> neighbors;
      neighbors.reserve(w.others.size());
      neighbors.push_back(w.ego);
      for (std::size_t j = 0; j < w.others.size(); ++j)
        if (j != idx) neighbors.push_back(w.others[j].state);
      return rvo_step(a.state, a.goal, neighbors, a.behavior.coop, w.params.behavior,
                      w.params.limits, w.params.goal_tolerance);
    }
    case BehaviorKind::ConstVel:
      return const_vel_step(a.state, a.goal, w.params.behavior, w.params.limits,
                            w.params.goal_tolerance);
    case BehaviorKind::Sinusoid:
      return sinusoid_step(a.state, a.goal, a.behavior.freq, a.behavior.amplitude,
                           w.time_seconds(), w.params.behavior, w.params.limits,
                           w.params.goal_tolerance);
    case BehaviorKind::Circular:
      return circular_step(a.state, a.anchor, a.behavior.radius, a.behavior.speed,
                           a.behavior.direction, w.params.limits);
  }
  return Vec2::Zero();
}

// First-order kinematics for velocity-commanded agents.
inline void apply_velocity_command(AgentState& s, const Vec2& command, double tau) {
  s.position += command * tau;
  const double speed = command.norm();
  if (speed > 1e-9) s.heading = std::atan2(command.y(), command.x());
  s.forward_velocity = speed;
  s.angular_velocity = 0.0;
}

// Commands for every non-ego agent from the pre-step snapshot, applied
// simultaneously afterwards.
inline void advance_others(World& w) {
  std::vector<Vec2> commands(w.others.size());
  for (std::size_t i = 0; i < w.others.size(); ++i) commands[i] = behavior_command(w, i);
  for (std::size_t i = 0; i < w.others.size(); ++i)
    apply_velocity_command(w.others[i].state, commands[i], w.params.tau);
}

// Terminal checks in priority order Collision > GoalReached > Timeout.
inline std::optional<EpisodeEvent> detect_event(const World& w) {
  for (std::size_t i = 0; i < w.others.size(); ++i) {
    const double d = (w.ego.position - w.others[i].state.position).norm();
    if (d < w.ego.radius + w.others[i].state.radius)
      return EpisodeEvent{EventKind::Collision, static_cast<int>(i), w.clock};
  }
  if ((w.ego.position - w.ego_goal).norm() <= w.params.goal_tolerance)
    return EpisodeEvent{EventKind::GoalReached, -1, w.clock};
  if (w.clock >= w.timeout_steps) return EpisodeEvent{EventKind::Timeout, -1, w.clock};
  return std::nullopt;
}

// Advance every agent by one time step: the ego under `ego_control`
// (second-order unicycle), the others under their behavior policies
// (first-order kinematics).
inline std::optional<EpisodeEvent> step_world(World& w, const ControlInput& ego_control) {
  advance_others(w);
  w.ego = step_dynamics(w.ego, ego_control, w.params.tau, w.params.limits);
  w.clock += 1;
  return detect_event(w);
}

// Variant for a velocity-commanded ego (the reactive baseline).
inline std::optional<EpisodeEvent> step_world_velocity(World& w, const Vec2& ego_velocity_command) {
  advance_others(w);
  apply_velocity_command(w.ego, ego_velocity_command, w.params.tau);
  w.clock += 1;
  return detect_event(w);
}

}  // namespace navlab
