#pragma once

#include <optional>

#include "navlab/mpc/planner.hpp"
#include "navlab/nn/network.hpp"
#include "navlab/rl/observe.hpp"

namespace navlab {

inline std::vector<NeighborView> neighbor_views(const std::vector<OtherAgent>& others) {
  std::vector<NeighborView> views;
  views.reserve(others.size());
  for (const auto& o : others)
    views.push_back({o.state.position, o.state.velocity(), o.state.radius});
  return views;
}

// Subgoal-policy + MPC executor for one agent: forward pass on the current
// observation, displacement action, MPC toward p + delta, first control (or
// the deceleration fallback). Holds the recurrent state and the planner
// warm start across steps.
class GoMpcController {
 public:
  GoMpcController(const PolicyParams& params, const MpcParams& mpc)
      : params_(&params), planner_(mpc), hidden_(HiddenState::zero(params.cfg)) {
    action_ball_ = mpc.horizon * mpc.tau * mpc.limits.v_max;
  }

  void reset() {
    planner_.reset();
    hidden_ = HiddenState::zero(params_->cfg);
  }

  const HiddenState& hidden() const { return hidden_; }
  double action_ball() const { return action_ball_; }
  MpcPlanner& planner() { return planner_; }

  struct StepOut {
    Observation obs;
    HiddenState hidden_before;
    ForwardOut net;
    Eigen::Vector2d action_raw{0.0, 0.0};
    double log_prob = 0.0;
    Vec2 subgoal{0.0, 0.0};
    ControlInput control;
    OcpSolution solution;
  };

  // sample_rng == nullptr: deterministic action (projected mean), used at
  // evaluation time.
  StepOut step(const AgentState& ego, const Vec2& goal, const std::vector<OtherAgent>& others,
               double v_ref, Rng* sample_rng) {
    StepOut out;
    out.obs = make_observation(ego, goal, others, v_ref);
    out.hidden_before = hidden_;
    out.net = forward(*params_, out.obs, hidden_);
    hidden_ = out.net.next;

    Eigen::Vector2d delta;
    if (sample_rng) {
      const ActionSample s = sample_action(out.net.mu, out.net.sigma, action_ball_, *sample_rng);
      out.action_raw = s.raw;
      out.log_prob = s.log_prob;
      delta = s.projected;
    } else {
      out.action_raw = out.net.mu;
      delta = project_action(out.net.mu, action_ball_);
      out.log_prob = gaussian_log_prob(out.net.mu, out.net.mu, out.net.sigma);
    }
    out.subgoal = ego.position + delta;

    auto res = planner_.plan(ego, neighbor_views(others), out.subgoal);
    out.control = res.control;
    out.solution = std::move(res.solution);
    return out;
  }

 private:
  const PolicyParams* params_;
  MpcPlanner planner_;
  HiddenState hidden_;
  double action_ball_;
};

}  // namespace navlab
