#pragma once

#include <optional>

#include "navlab/core/config.hpp"
#include "navlab/sim/world.hpp"

namespace navlab {

enum class RewardVariant { Sparse, Time, Progress };

inline const char* reward_name(RewardVariant v) {
  switch (v) {
    case RewardVariant::Sparse: return "sparse";
    case RewardVariant::Time: return "time";
    case RewardVariant::Progress: return "progress";
  }
  return "?";
}

inline RewardVariant reward_variant_from_string(const std::string& s) {
  if (s == "sparse") return RewardVariant::Sparse;
  if (s == "time") return RewardVariant::Time;
  if (s == "progress") return RewardVariant::Progress;
  throw ConfigError("unknown reward_variant: " + s);
}

struct RewardConfig {
  double r_goal = 3.0;
  double r_collision = -10.0;
  RewardVariant variant = RewardVariant::Time;

  static RewardConfig from_config(const Config& c) {
    RewardConfig r;
    r.r_goal = c.get_double("r_goal");
    r.r_collision = c.get_double("r_collision");
    r.variant = reward_variant_from_string(c.get_string("reward_variant"));
    return r;
  }
};

// Terminal branches pay r_goal / r_collision; every other step (timeouts
// included) pays the variant step reward.
inline double compute_reward(const Vec2& prev_pos, const Vec2& next_pos, const Vec2& goal,
                             const std::optional<EpisodeEvent>& event, const RewardConfig& rc) {
  if (event) {
    if (event->kind == EventKind::GoalReached) return rc.r_goal;
    if (event->kind == EventKind::Collision) return rc.r_collision;
  }
  switch (rc.variant) {
    case RewardVariant::Sparse: return 0.0;
    case RewardVariant::Time: return -0.01;
    case RewardVariant::Progress:
      return 0.01 * ((prev_pos - goal).norm() - (next_pos - goal).norm());
  }
  return 0.0;
}

}  // namespace navlab
