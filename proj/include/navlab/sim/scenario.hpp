#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "navlab/sim/world.hpp"

namespace navlab {

struct SpawnFailure : std::runtime_error {
  explicit SpawnFailure(const std::string& what) : std::runtime_error(what) {}
};

inline const char* scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::SymmetricSwap: return "symmetric";
    case ScenarioKind::AsymmetricSwap: return "asymmetric";
    case ScenarioKind::PairwiseSwap: return "pairwise";
    case ScenarioKind::Random: return "random";
  }
  return "?";
}

namespace detail {

inline bool clearance_ok(const std::vector<Vec2>& pts, double radius, double margin) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() <= 2.0 * radius + margin) return false;
  return true;
}

inline Vec2 sample_in_disc(Rng& rng, double r_max) {
  const double r = r_max * std::sqrt(uniform(rng, 0.0, 1.0));
  const double th = uniform(rng, 0.0, 2.0 * M_PI);
  return {r * std::cos(th), r * std::sin(th)};
}

// Swap pairs across opposite quadrants: the two members sample their angles
// independently inside their own quadrant (generic crossings are oblique,
// exact head-on alignment has measure zero), goals exchanged. Shared distance
// to the origin for the symmetric variant, distinct distances otherwise.
inline void place_swap_pairs(int n, Rng& rng, const SimParams& p, bool shared_radius,
                             std::vector<Vec2>& starts, std::vector<Vec2>& goals) {
  const int retries = p.spawn_retries;
  for (int attempt = 0; attempt < retries; ++attempt) {
    starts.assign(n, Vec2::Zero());
    goals.assign(n, Vec2::Zero());
    const double shared = uniform(rng, 0.55, 0.95) * p.arena_radius;
    std::vector<double> radii(n);
    for (int i = 0; i < n; ++i)
      radii[i] = shared_radius ? shared : uniform(rng, 0.4, 0.95) * p.arena_radius;

    auto in_quadrant = [&](int q, double radius) {
      const double th = uniform(rng, 0.05, M_PI / 2.0 - 0.05) + q * (M_PI / 2.0);
      return Vec2{radius * std::cos(th), radius * std::sin(th)};
    };

    const int pairs = n / 2;
    for (int k = 0; k < pairs; ++k) {
      const int quadrant = k % 2;  // pair k spans quadrants (q, q+2)
      const int a = 2 * k, b = 2 * k + 1;
      starts[a] = in_quadrant(quadrant, radii[a]);
      starts[b] = in_quadrant(quadrant + 2, radii[b]);
      goals[a] = starts[b];
      goals[b] = starts[a];
    }
    if (n % 2 == 1) {
      starts[n - 1] = in_quadrant(uniform_int(rng, 0, 3), radii[n - 1]);
      goals[n - 1] = -starts[n - 1];
    }
    if (clearance_ok(starts, p.agent_radius, p.spawn_margin)) return;
  }
  throw SpawnFailure("swap scenario: clearance not satisfiable within retry budget");
}

inline void place_random_starts(int n, Rng& rng, const SimParams& p, std::vector<Vec2>& starts) {
  starts.clear();
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < p.spawn_retries; ++attempt) {
      const Vec2 cand = sample_in_disc(rng, p.arena_radius);
      bool ok = true;
      for (const auto& q : starts)
        if ((cand - q).norm() <= 2.0 * p.agent_radius + p.spawn_margin) {
          ok = false;
          break;
        }
      if (ok) {
        starts.push_back(cand);
        placed = true;
        break;
      }
    }
    if (!placed) throw SpawnFailure("random starts: clearance not satisfiable within retry budget");
  }
}

}  // namespace detail

// Builds a fresh episode world. n_agents counts every agent, ego included;
// agent 0 of the layout becomes the ego. Behaviors for the others are sampled
// from the 80/20 cooperative mix.
inline World spawn_scenario(ScenarioKind kind, int n_agents, Rng& rng, const SimParams& params) {
  if (n_agents < 1 || n_agents > params.max_agents)
    throw SpawnFailure("n_agents out of range: " + std::to_string(n_agents));

  std::vector<Vec2> starts, goals;
  switch (kind) {
    case ScenarioKind::SymmetricSwap:
      detail::place_swap_pairs(n_agents, rng, params, /*shared_radius=*/true, starts, goals);
      break;
    case ScenarioKind::AsymmetricSwap:
      detail::place_swap_pairs(n_agents, rng, params, /*shared_radius=*/false, starts, goals);
      break;
    case ScenarioKind::PairwiseSwap: {
      detail::place_random_starts(n_agents, rng, params, starts);
      goals.assign(n_agents, Vec2::Zero());
      std::vector<int> order(n_agents);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int k = 0; k + 1 < n_agents; k += 2) {
        goals[order[k]] = starts[order[k + 1]];
        goals[order[k + 1]] = starts[order[k]];
      }
      if (n_agents % 2 == 1) {
        const int leftover = order.back();
        for (int attempt = 0; attempt < params.spawn_retries; ++attempt) {
          const Vec2 g = detail::sample_in_disc(rng, params.arena_radius);
          if ((g - starts[leftover]).norm() >= params.goal_min_dist) {
            goals[leftover] = g;
            break;
          }
        }
      }
      break;
    }
    case ScenarioKind::Random: {
      detail::place_random_starts(n_agents, rng, params, starts);
      goals.assign(n_agents, Vec2::Zero());
      for (int i = 0; i < n_agents; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < params.spawn_retries; ++attempt) {
          const Vec2 g = detail::sample_in_disc(rng, params.arena_radius);
          if ((g - starts[i]).norm() < params.goal_min_dist) continue;
          bool ok = true;
          for (int j = 0; j < i; ++j)
            if ((g - goals[j]).norm() <= 2.0 * params.agent_radius + params.spawn_margin) {
              ok = false;
              break;
            }
          if (ok) {
            goals[i] = g;
            placed = true;
            break;
          }
        }
        if (!placed) throw SpawnFailure("random goals: clearance not satisfiable within retry budget");
      }
      break;
    }
  }

  World w;
  w.params = params;
  w.kind = kind;
  w.ego.position = starts[0];
  w.ego.radius = params.agent_radius;
  w.ego.heading = wrap_angle(std::atan2(goals[0].y() - starts[0].y(), goals[0].x() - starts[0].x()));
  w.ego_goal = goals[0];
  w.timeout_steps = timeout_budget(starts[0], goals[0], params);

  const auto behaviors = assign_behaviors(n_agents - 1, rng, params.behavior);
  for (int i = 1; i < n_agents; ++i) {
    OtherAgent o;
    o.state.position = starts[i];
    o.state.radius = params.agent_radius;
    o.state.heading = wrap_angle(std::atan2(goals[i].y() - starts[i].y(), goals[i].x() - starts[i].x()));
    o.goal = goals[i];
    o.anchor = starts[i];
    o.behavior = behaviors[i - 1];
    w.others.push_back(o);
  }
  return w;
}

}  // namespace navlab
