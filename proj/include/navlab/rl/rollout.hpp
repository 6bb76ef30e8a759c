#pragma once

#include <cmath>
#include <vector>

#include "navlab/nn/network.hpp"
#include "navlab/rl/gae.hpp"

namespace navlab {

// One environment step as buffered for training. `action` is the
// pre-projection Gaussian sample so that recomputed log-probabilities match
// `log_prob` exactly; the applied subgoal displacement is its projection.
struct TransitionRecord {
  Observation obs;
  HiddenState hidden;  // recurrent state fed into the forward pass at this step
  Eigen::Vector2d action{0.0, 0.0};
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;       // goal or collision
  bool truncated = false;  // timeout: bootstrapped, terminal only for accounting
  double bootstrap_value = 0.0;  // V(next_obs) when truncated or window-cut
  Observation next_obs;
  Eigen::Vector2d expert_action{0.0, 0.0};  // MPC warm-start target
  bool has_expert = false;
  // filled in by prepare_advantages
  double advantage = 0.0;
  double ret = 0.0;
};

// Runs GAE over a collected window and fills advantage/return fields.
// Truncated steps fold their bootstrap value into the reward and close the
// advantage chain, which bootstraps the cut without leaking across episodes.
inline void prepare_advantages(std::vector<TransitionRecord>& buf, double tail_bootstrap,
                               double gamma, double lambda) {
  const std::size_t T = buf.size();
  std::vector<double> rewards(T), values(T + 1);
  std::vector<std::uint8_t> dones(T);
  for (std::size_t i = 0; i < T; ++i) {
    rewards[i] = buf[i].reward;
    values[i] = buf[i].value;
    dones[i] = buf[i].done || buf[i].truncated;
    if (buf[i].truncated) rewards[i] += gamma * buf[i].bootstrap_value;
  }
  values[T] = buf.empty() || buf.back().done || buf.back().truncated ? 0.0 : tail_bootstrap;
  const GaeResult g = gae(rewards, values, dones, gamma, lambda);
  for (std::size_t i = 0; i < T; ++i) {
    buf[i].advantage = g.advantages[i];
    buf[i].ret = g.returns[i];
  }
}

// Zero-mean unit-variance normalization over the whole buffer.
inline void normalize_advantages(std::vector<TransitionRecord>& buf) {
  if (buf.size() < 2) return;
  double mean = 0.0;
  for (const auto& t : buf) mean += t.advantage;
  mean /= double(buf.size());
  double var = 0.0;
  for (const auto& t : buf) var += (t.advantage - mean) * (t.advantage - mean);
  var /= double(buf.size());
  const double sd = std::sqrt(var);
  if (sd < 1e-12) return;
  for (auto& t : buf) t.advantage = (t.advantage - mean) / sd;
}

}  // namespace navlab
