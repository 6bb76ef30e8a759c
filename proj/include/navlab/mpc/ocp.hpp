#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "navlab/core/config.hpp"
#include "navlab/sim/agent.hpp"

namespace navlab {

struct DegenerateReference : std::runtime_error {
  DegenerateReference() : std::runtime_error("reference coincides with the initial position") {}
};

struct MpcParams {
  int horizon = 20;  // stages N; tau * N = 2 s by default
  int closest_m = 6;
  double q_terminal = 100.0;
  double q_control = 0.1;  // both diagonal entries of Q_u
  double tau = 0.1;
  double constraint_tol = 1e-3;
  double eps_norm = 1e-6;
  double penalty_mu0 = 10.0;
  double penalty_growth = 5.0;
  int outer_rounds = 6;
  int inner_iters = 200;
  double kkt_tol = 1e-4;
  double budget_ms = 0.0;  // 0 = unlimited
  Limits limits;

  static MpcParams from_config(const Config& c) {
    MpcParams p;
    p.horizon = c.get_int("mpc_stages");
    p.closest_m = c.get_int("mpc_closest");
    p.q_terminal = c.get_double("mpc_q_terminal");
    p.q_control = c.get_double("mpc_q_control");
    p.tau = c.get_double("tau");
    p.constraint_tol = c.get_double("mpc_constraint_tol");
    p.eps_norm = c.get_double("mpc_eps_norm");
    p.penalty_mu0 = c.get_double("mpc_penalty_mu0");
    p.penalty_growth = c.get_double("mpc_penalty_growth");
    p.outer_rounds = c.get_int("mpc_outer_rounds");
    p.inner_iters = c.get_int("mpc_inner_iters");
    p.kkt_tol = c.get_double("mpc_kkt_tol");
    p.budget_ms = c.get_double("mpc_budget_ms");
    p.limits = Limits::from_config(c);
    return p;
  }
};

// Constant-velocity extrapolation of one neighbor over the horizon.
struct NeighborPrediction {
  Eigen::Matrix<double, 2, Eigen::Dynamic> positions;  // 2 x (N+1)
  double radius = 0.3;
};

struct OcpProblem {
  StateVec x0;
  Vec2 p_ref{0.0, 0.0};
  std::vector<NeighborPrediction> predictions;
  MpcParams params;
};

enum class SolveStatus { Optimal, MaxIterFeasible, Infeasible };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterFeasible: return "max_iter_feasible";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct OcpSolution {
  std::vector<StateVec> states;        // N+1 entries
  std::vector<ControlInput> controls;  // N entries
  double objective = 0.0;              // true cost, penalties excluded
  SolveStatus status = SolveStatus::Infeasible;
  double solve_time_ms = 0.0;
  double kkt_residual = 0.0;
};

namespace detail {

template <typename AgentLike>
inline const Vec2& position_of(const AgentLike& a) {
  if constexpr (requires { a.position; })
    return a.position;
  else
    return a.state.position;
}

}  // namespace detail

// Indices of the min(m, n) agents closest to the ego; ties go to the lower
// index.
template <typename AgentLike>
inline std::vector<int> select_closest_m(const AgentState& ego, const std::vector<AgentLike>& others,
                                         int m) {
  std::vector<int> idx(others.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> dist(others.size());
  for (std::size_t i = 0; i < others.size(); ++i)
    dist[i] = (ego.position - detail::position_of(others[i])).norm();
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  if (static_cast<int>(idx.size()) > m) idx.resize(std::max(m, 0));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// p_hat_i(k) = p_i + k * tau * v_i for k = 0..N.
inline NeighborPrediction predict_agent(const Vec2& position, const Vec2& velocity, double radius,
                                        int horizon, double tau) {
  NeighborPrediction pred;
  pred.radius = radius;
  pred.positions.resize(2, horizon + 1);
  for (int k = 0; k <= horizon; ++k) pred.positions.col(k) = position + (k * tau) * velocity;
  return pred;
}

inline std::vector<NeighborPrediction> predict_others(const std::vector<AgentState>& selected,
                                                      int horizon, double tau) {
  std::vector<NeighborPrediction> out;
  out.reserve(selected.size());
  for (const auto& a : selected)
    out.push_back(predict_agent(a.position, a.velocity(), a.radius, horizon, tau));
  return out;
}

// J_N = Q_N * |p_N - p_ref|^2 / |p_0 - p_ref|^2. Callers substitute the
// unnormalized residual when the reference degenerates onto the start.
inline double terminal_cost(const Vec2& p_N, const Vec2& p_0, const Vec2& p_ref, double q_terminal,
                            double eps_norm = 1e-6) {
  const double denom = (p_0 - p_ref).squaredNorm();
  if ((p_0 - p_ref).norm() <= eps_norm) throw DegenerateReference();
  return q_terminal * (p_N - p_ref).squaredNorm() / denom;
}

inline double stage_cost(const ControlInput& u, double q_control) {
  return q_control * (u.linear_accel * u.linear_accel + u.angular_accel * u.angular_accel);
}

// Signed clearance; the constraint of the OCP is margin > 0.
inline double collision_margin(const Vec2& p_k, const Vec2& p_i_k, double r, double r_i) {
  return (p_k - p_i_k).norm() - (r + r_i);
}

}  // namespace navlab
