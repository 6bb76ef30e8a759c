#pragma once

#include <optional>
#include <vector>

#include "navlab/mpc/solver.hpp"

namespace navlab {

// Brings v and omega toward zero as fast as the admissible set allows.
inline ControlInput fallback_decelerate(const AgentState& x, double tau, const Limits& lim) {
  return {-std::clamp(x.forward_velocity / tau, -lim.a_max, lim.a_max),
          -std::clamp(x.angular_velocity / tau, -lim.alpha_max, lim.alpha_max)};
}

// What the planner needs to know about one surrounding agent.
struct NeighborView {
  Vec2 position{0.0, 0.0};
  Vec2 velocity{0.0, 0.0};
  double radius = 0.3;
};

// One planner instance serves one agent and carries its warm start between
// consecutive solves.
class MpcPlanner {
 public:
  explicit MpcPlanner(const MpcParams& params) : params_(params) {}

  struct Result {
    ControlInput control;
    OcpSolution solution;
  };

  void reset() { warm_.reset(); }

  const MpcParams& params() const { return params_; }

  Result plan(const AgentState& ego, const std::vector<NeighborView>& others, const Vec2& p_ref) {
    OcpProblem prob;
    prob.params = params_;
    prob.x0 = ego.control_state();
    prob.p_ref = p_ref;
    const auto selected = select_closest_m(ego, others, params_.closest_m);
    prob.predictions.reserve(selected.size());
    for (int idx : selected) {
      const NeighborView& nb = others[idx];
      // Predicted radius inflated by the constraint tolerance: conservative
      // against audit-level violations.
      prob.predictions.push_back(predict_agent(nb.position, nb.velocity,
                                               nb.radius + params_.constraint_tol,
                                               params_.horizon, params_.tau));
    }

    Result res;
    res.solution = solve_ocp(prob, ego.radius, warm_);
    warm_ = res.solution;
    if (res.solution.status == SolveStatus::Infeasible)
      res.control = fallback_decelerate(ego, params_.tau, params_.limits);
    else
      res.control = res.solution.controls.front();
    return res;
  }

 private:
  MpcParams params_;
  std::optional<OcpSolution> warm_;
};

}  // namespace navlab
