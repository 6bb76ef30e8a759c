#pragma once

#include <chrono>
#include <cmath>
#include <deque>
#include <optional>

#include "navlab/mpc/ocp.hpp"
#include "navlab/sim/dynamics.hpp"

namespace navlab {

// Direct single shooting over the N control inputs. Collision, state-bound
// and control-bound constraints enter through an exterior quadratic penalty
// whose weight escalates multiplicatively across outer rounds. The inner
// minimizer is a first-order descent: L-BFGS-scaled gradient steps with
// Armijo backtracking on gradients back-propagated analytically through the
// RK4 rollout (plain steepest descent stalls on the ill-conditioned shooting
// Hessian). Controls are clamped to the admissible box at extraction; the
// residual penalty violations there are orders of magnitude below the
// constraint tolerance.
class ShootingSolver {
 public:
  ShootingSolver(const OcpProblem& problem, double ego_radius)
      : prob_(problem), ego_radius_(ego_radius), N_(problem.params.horizon) {}

  OcpSolution solve(const std::optional<OcpSolution>& warm_start) const {
    const auto t_start = std::chrono::steady_clock::now();
    const MpcParams& p = prob_.params;
    // Collision feasibility is declared at half the audit tolerance, leaving
    // headroom for the clamped re-roll the independent audits perform. Bound
    // violations get the full contract tolerance (nothing re-audits them).
    const double coll_tol = 0.5 * p.constraint_tol;
    const double bound_tol = p.constraint_tol;

    // Incumbent: best feasible iterate by true objective, else the iterate
    // with the smallest violation. Seeded from the warm-start candidates so a
    // re-solve can never regress below what it was handed.
    struct Candidate {
      Eigen::VectorXd z;  // clamped
      double coll_viol = std::numeric_limits<double>::infinity();
      double bound_viol = std::numeric_limits<double>::infinity();
      double obj = std::numeric_limits<double>::infinity();
      bool feasible = false;
    };
    auto assess = [&](const Eigen::VectorXd& raw) {
      Candidate c;
      c.z = raw;
      clamp_controls(c.z);
      const auto xs = rollout(c.z);
      c.coll_viol = collision_violation(xs);
      c.bound_viol = bound_violation(xs);
      c.obj = objective_of(xs, c.z);
      c.feasible = c.coll_viol <= coll_tol && c.bound_viol <= bound_tol;
      return c;
    };
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.feasible != b.feasible) return a.feasible;
      if (a.feasible) return a.obj < b.obj;
      return std::max(a.coll_viol, a.bound_viol) < std::max(b.coll_viol, b.bound_viol);
    };

    const auto starts = start_candidates(warm_start);
    Candidate incumbent = assess(starts.front());
    Eigen::VectorXd z = starts.front();
    double z_phi = penalized(z, p.penalty_mu0);
    for (std::size_t i = 1; i < starts.size(); ++i) {
      const Candidate c = assess(starts[i]);
      if (better(c, incumbent)) incumbent = c;
      const double phi = penalized(starts[i], p.penalty_mu0);
      if (phi < z_phi) {
        z = starts[i];
        z_phi = phi;
      }
    }

    double mu = p.penalty_mu0;
    double kkt = std::numeric_limits<double>::infinity();
    for (int round = 0; round < p.outer_rounds; ++round) {
      kkt = minimize(z, mu, t_start);
      const Candidate c = assess(z);
      if (better(c, incumbent)) incumbent = c;
      if (c.feasible && kkt <= p.kkt_tol) break;
      if (over_budget(t_start)) break;
      mu *= p.penalty_growth;
    }

    OcpSolution sol;
    sol.controls = unpack(incumbent.z);
    sol.states = rollout(incumbent.z);
    sol.objective = incumbent.obj;
    sol.kkt_residual = gradient(incumbent.z, mu).lpNorm<Eigen::Infinity>();
    if (!incumbent.feasible)
      sol.status = SolveStatus::Infeasible;
    else if (sol.kkt_residual <= p.kkt_tol)
      sol.status = SolveStatus::Optimal;
    else
      sol.status = SolveStatus::MaxIterFeasible;
    sol.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                  t_start)
                            .count();
    return sol;
  }

  // Penalized objective and analytic gradient; exposed for the
  // finite-difference regression tests.
  double penalized(const Eigen::VectorXd& z, double mu) const {
    const auto states = rollout(z);
    const MpcParams& p = prob_.params;
    double phi = objective_of(states, z);
    for (int k = 1; k <= N_; ++k) {
      const Vec2 pk{states[k](0), states[k](1)};
      for (const auto& pred : prob_.predictions) {
        const double viol =
            std::max(0.0, -collision_margin(pk, pred.positions.col(k), ego_radius_, pred.radius));
        phi += mu * viol * viol;
      }
      const double vv = std::max(0.0, std::abs(states[k](3)) - p.limits.v_max);
      const double wv = std::max(0.0, std::abs(states[k](4)) - p.limits.omega_max);
      phi += mu * (vv * vv + wv * wv);
    }
    for (int k = 0; k < N_; ++k) {
      const double av = std::max(0.0, std::abs(z(2 * k)) - p.limits.a_max);
      const double aw = std::max(0.0, std::abs(z(2 * k + 1)) - p.limits.alpha_max);
      phi += mu * (av * av + aw * aw);
    }
    return phi;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z, double mu) const {
    const MpcParams& p = prob_.params;
    std::vector<StateVec> xs(N_ + 1);
    std::vector<StateJac> A(N_);
    std::vector<ControlJac> B(N_);
    xs[0] = prob_.x0;
    for (int k = 0; k < N_; ++k)
      xs[k + 1] = rk4_step_jac(xs[k], {z(2 * k), z(2 * k + 1)}, p.tau, A[k], B[k]);

    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * N_);
    StateVec lambda = state_penalty_grad(xs[N_], N_, mu) + terminal_grad(xs[N_]);
    for (int k = N_ - 1; k >= 0; --k) {
      g(2 * k) = 2.0 * p.q_control * z(2 * k);
      g(2 * k + 1) = 2.0 * p.q_control * z(2 * k + 1);
      const double av = std::max(0.0, std::abs(z(2 * k)) - p.limits.a_max);
      if (av > 0.0) g(2 * k) += 2.0 * mu * av * (z(2 * k) > 0 ? 1.0 : -1.0);
      const double aw = std::max(0.0, std::abs(z(2 * k + 1)) - p.limits.alpha_max);
      if (aw > 0.0) g(2 * k + 1) += 2.0 * mu * aw * (z(2 * k + 1) > 0 ? 1.0 : -1.0);
      g.segment<2>(2 * k) += B[k].transpose() * lambda;
      if (k > 0) lambda = A[k].transpose() * lambda + state_penalty_grad(xs[k], k, mu);
    }
    return g;
  }

  std::vector<StateVec> rollout(const Eigen::VectorXd& z) const {
    std::vector<StateVec> xs(N_ + 1);
    xs[0] = prob_.x0;
    for (int k = 0; k < N_; ++k)
      xs[k + 1] = rk4_step(xs[k], {z(2 * k), z(2 * k + 1)}, prob_.params.tau);
    return xs;
  }

  double collision_violation(const std::vector<StateVec>& states) const {
    double worst = 0.0;
    for (int k = 1; k <= N_; ++k) {
      const Vec2 pk{states[k](0), states[k](1)};
      for (const auto& pred : prob_.predictions)
        worst = std::max(worst,
                         -collision_margin(pk, pred.positions.col(k), ego_radius_, pred.radius));
    }
    return worst;
  }

  double bound_violation(const std::vector<StateVec>& states) const {
    double worst = 0.0;
    for (int k = 1; k <= N_; ++k) {
      worst = std::max(worst, std::abs(states[k](3)) - prob_.params.limits.v_max);
      worst = std::max(worst, std::abs(states[k](4)) - prob_.params.limits.omega_max);
    }
    return worst;
  }

  // Largest collision / state-bound violation along a trajectory.
  double max_violation(const std::vector<StateVec>& states) const {
    return std::max(collision_violation(states), bound_violation(states));
  }

 private:
  // Warm start shifted one stage (last control duplicated), plus the
  // unshifted controls and plain zero as alternative starting points.
  std::vector<Eigen::VectorXd> start_candidates(const std::optional<OcpSolution>& warm) const {
    std::vector<Eigen::VectorXd> out;
    if (warm && static_cast<int>(warm->controls.size()) == N_) {
      Eigen::VectorXd shifted(2 * N_), raw(2 * N_);
      for (int k = 0; k < N_; ++k) {
        const ControlInput& u = warm->controls[std::min(k + 1, N_ - 1)];
        shifted(2 * k) = u.linear_accel;
        shifted(2 * k + 1) = u.angular_accel;
        raw(2 * k) = warm->controls[k].linear_accel;
        raw(2 * k + 1) = warm->controls[k].angular_accel;
      }
      out.push_back(std::move(shifted));
      out.push_back(std::move(raw));
    }
    out.push_back(Eigen::VectorXd::Zero(2 * N_));
    return out;
  }

  void clamp_controls(Eigen::VectorXd& z) const {
    const Limits& lim = prob_.params.limits;
    for (int k = 0; k < N_; ++k) {
      z(2 * k) = std::clamp(z(2 * k), -lim.a_max, lim.a_max);
      z(2 * k + 1) = std::clamp(z(2 * k + 1), -lim.alpha_max, lim.alpha_max);
    }
  }

  bool over_budget(const std::chrono::steady_clock::time_point& t_start) const {
    if (prob_.params.budget_ms <= 0.0) return false;
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return ms >= prob_.params.budget_ms;
  }

  // First-order descent with L-BFGS two-loop direction scaling and Armijo
  // backtracking. Never increases the penalized objective; returns the final
  // gradient infinity norm.
  double minimize(Eigen::VectorXd& z, double mu,
                  const std::chrono::steady_clock::time_point& t_start) const {
    const MpcParams& p = prob_.params;
    const int mem = 8;
    std::deque<Eigen::VectorXd> S, Y;
    double phi = penalized(z, mu);
    Eigen::VectorXd g = gradient(z, mu);

    for (int it = 0; it < p.inner_iters; ++it) {
      if (g.lpNorm<Eigen::Infinity>() <= p.kkt_tol) return g.lpNorm<Eigen::Infinity>();
      if (it % 16 == 0 && over_budget(t_start)) break;

      Eigen::VectorXd d = two_loop_direction(g, S, Y);
      double gd = g.dot(d);
      if (!(gd < 0.0)) {  // not a descent direction: reset curvature history
        S.clear();
        Y.clear();
        d = -g;
        gd = g.dot(d);
      }

      double alpha = it == 0 && S.empty() ? 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>()) : 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 50; ++bt) {
        const Eigen::VectorXd cand = z + alpha * d;
        const double phi_cand = penalized(cand, mu);
        if (phi_cand <= phi + 1e-4 * alpha * gd) {
          const Eigen::VectorXd g_new = gradient(cand, mu);
          const Eigen::VectorXd s = alpha * d;
          const Eigen::VectorXd y = g_new - g;
          if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            S.push_back(s);
            Y.push_back(y);
            if (static_cast<int>(S.size()) > mem) {
              S.pop_front();
              Y.pop_front();
            }
          }
          z = cand;
          phi = phi_cand;
          g = g_new;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (S.empty()) break;  // no admissible step even along -g
        S.clear();
        Y.clear();
      }
    }
    return g.lpNorm<Eigen::Infinity>();
  }

  static Eigen::VectorXd two_loop_direction(const Eigen::VectorXd& g,
                                            const std::deque<Eigen::VectorXd>& S,
                                            const std::deque<Eigen::VectorXd>& Y) {
    Eigen::VectorXd q = -g;
    if (S.empty()) return q;
    const int m = static_cast<int>(S.size());
    std::vector<double> alpha(m), rho(m);
    for (int i = m - 1; i >= 0; --i) {
      rho[i] = 1.0 / Y[i].dot(S[i]);
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho[i] * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    return q;
  }

  std::vector<ControlInput> unpack(const Eigen::VectorXd& z) const {
    std::vector<ControlInput> us(N_);
    for (int k = 0; k < N_; ++k) us[k] = {z(2 * k), z(2 * k + 1)};
    return us;
  }

  double objective_of(const std::vector<StateVec>& xs, const Eigen::VectorXd& z) const {
    const MpcParams& p = prob_.params;
    const Vec2 p0{prob_.x0(0), prob_.x0(1)};
    const Vec2 pN{xs[N_](0), xs[N_](1)};
    double j;
    try {
      j = terminal_cost(pN, p0, prob_.p_ref, p.q_terminal, p.eps_norm);
    } catch (const DegenerateReference&) {
      j = p.q_terminal * (pN - prob_.p_ref).squaredNorm();
    }
    for (int k = 0; k < N_; ++k)
      j += p.q_control * (z(2 * k) * z(2 * k) + z(2 * k + 1) * z(2 * k + 1));
    return j;
  }

  double true_objective(const OcpSolution& sol) const {
    Eigen::VectorXd z(2 * N_);
    for (int k = 0; k < N_; ++k) {
      z(2 * k) = sol.controls[k].linear_accel;
      z(2 * k + 1) = sol.controls[k].angular_accel;
    }
    return objective_of(sol.states, z);
  }

  // d(penalties at stage k)/dx_k.
  StateVec state_penalty_grad(const StateVec& x, int k, double mu) const {
    StateVec g = StateVec::Zero();
    if (k == 0) return g;
    const MpcParams& p = prob_.params;
    const Vec2 pk{x(0), x(1)};
    for (const auto& pred : prob_.predictions) {
      const Vec2 diff = pk - Vec2(pred.positions.col(k));
      const double d = diff.norm();
      const double viol = std::max(0.0, (ego_radius_ + pred.radius) - d);
      if (viol > 0.0 && d > 1e-12) {
        const Vec2 dir = diff / d;
        g(0) += -2.0 * mu * viol * dir.x();
        g(1) += -2.0 * mu * viol * dir.y();
      }
    }
    const double vv = std::max(0.0, std::abs(x(3)) - p.limits.v_max);
    if (vv > 0.0) g(3) += 2.0 * mu * vv * (x(3) > 0 ? 1.0 : -1.0);
    const double wv = std::max(0.0, std::abs(x(4)) - p.limits.omega_max);
    if (wv > 0.0) g(4) += 2.0 * mu * wv * (x(4) > 0 ? 1.0 : -1.0);
    return g;
  }

  StateVec terminal_grad(const StateVec& xN) const {
    const MpcParams& p = prob_.params;
    const Vec2 p0{prob_.x0(0), prob_.x0(1)};
    const Vec2 pN{xN(0), xN(1)};
    double denom = (p0 - prob_.p_ref).squaredNorm();
    if ((p0 - prob_.p_ref).norm() <= p.eps_norm) denom = 1.0;
    const Vec2 dp = 2.0 * p.q_terminal / denom * (pN - prob_.p_ref);
    StateVec g = StateVec::Zero();
    g(0) = dp.x();
    g(1) = dp.y();
    return g;
  }

  const OcpProblem& prob_;
  double ego_radius_;
  int N_;
};

inline OcpSolution solve_ocp(const OcpProblem& problem, double ego_radius,
                             const std::optional<OcpSolution>& warm_start = std::nullopt) {
  return ShootingSolver(problem, ego_radius).solve(warm_start);
}

}  // namespace navlab
