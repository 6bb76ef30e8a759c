#include <catch2/catch_amalgamated.hpp>

#include "navlab/core/rng.hpp"
#include "navlab/mpc/planner.hpp"

using namespace navlab;

namespace {

MpcParams default_mpc() { return MpcParams{}; }

// Random but initially collision-free 6-agent problem instance.
OcpProblem random_problem(Rng& rng, int n_agents = 6) {
  OcpProblem prob;
  prob.params = default_mpc();
  prob.x0 << 0.0, 0.0, uniform(rng, -M_PI, M_PI), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0);
  prob.p_ref = {uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)};
  for (int i = 0; i < n_agents; ++i) {
    Vec2 pos;
    do {
      pos = {uniform(rng, -4.0, 4.0), uniform(rng, -4.0, 4.0)};
    } while (pos.norm() < 0.75);  // keep stage 0 clear of the ego
    const Vec2 vel{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
    prob.predictions.push_back(predict_agent(pos, vel, 0.3 + prob.params.constraint_tol,
                                             prob.params.horizon, prob.params.tau));
  }
  return prob;
}

// Independent audit: re-roll the controls through the simulator-grade
// integrator and re-evaluate the margins against the stored predictions.
double audit_min_margin(const OcpProblem& prob, const OcpSolution& sol, double ego_radius) {
  AgentState s = AgentState::from_control_state(prob.x0, ego_radius);
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& pred : prob.predictions)
    min_margin = std::min(
        min_margin, collision_margin(s.position, pred.positions.col(0), ego_radius, pred.radius));
  for (int k = 0; k < prob.params.horizon; ++k) {
    s = step_dynamics(s, sol.controls[k], prob.params.tau, prob.params.limits);
    for (const auto& pred : prob.predictions)
      min_margin = std::min(min_margin, collision_margin(s.position, pred.positions.col(k + 1),
                                                         ego_radius, pred.radius));
  }
  return min_margin;
}

}  // namespace

TEST_CASE("select_closest_m basics") {
  AgentState ego;
  std::vector<AgentState> others(3);
  others[0].position = {5.0, 0.0};
  others[1].position = {1.0, 0.0};
  others[2].position = {3.0, 0.0};
  CHECK(select_closest_m(ego, others, 2) == std::vector<int>{1, 2});
  CHECK(select_closest_m(ego, others, 10) == std::vector<int>{0, 1, 2});
  CHECK(select_closest_m(ego, others, 0).empty());
}

TEST_CASE("select_closest_m matches a full-sort oracle on random instances") {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    AgentState ego;
    ego.position = {uniform(rng, -2, 2), uniform(rng, -2, 2)};
    std::vector<AgentState> others(50);
    for (auto& o : others) o.position = {uniform(rng, -10, 10), uniform(rng, -10, 10)};
    const auto got = select_closest_m(ego, others, 6);

    std::vector<int> oracle(others.size());
    std::iota(oracle.begin(), oracle.end(), 0);
    std::stable_sort(oracle.begin(), oracle.end(), [&](int a, int b) {
      return (ego.position - others[a].position).norm() <
             (ego.position - others[b].position).norm();
    });
    oracle.resize(6);
    std::sort(oracle.begin(), oracle.end());
    CHECK(got == oracle);
  }
}

TEST_CASE("select_closest_m tie-break is deterministic toward lower index") {
  AgentState ego;
  std::vector<AgentState> others(3);
  others[0].position = {2.0, 0.0};
  others[1].position = {0.0, 2.0};  // same distance as 0
  others[2].position = {0.0, -2.0};
  const auto got = select_closest_m(ego, others, 2);
  CHECK(got == std::vector<int>{0, 1});
}

TEST_CASE("predict_others") {
  SECTION("stationary agent stays put") {
    const auto pred = predict_agent({1.0, 2.0}, {0.0, 0.0}, 0.3, 20, 0.1);
    for (int k = 0; k <= 20; ++k) {
      CHECK(pred.positions(0, k) == 1.0);
      CHECK(pred.positions(1, k) == 2.0);
    }
  }
  SECTION("linear extrapolation") {
    const auto pred = predict_agent({0.0, 0.0}, {1.0, 0.0}, 0.3, 20, 0.1);
    CHECK(pred.positions(0, 20) == Catch::Approx(2.0));
    CHECK(pred.positions(1, 20) == Catch::Approx(0.0));
  }
  SECTION("stage k equals k single-step extrapolations") {
    Rng rng = make_rng(2);
    const Vec2 p{uniform(rng, -3, 3), uniform(rng, -3, 3)};
    const Vec2 v{uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5)};
    const auto pred = predict_agent(p, v, 0.3, 20, 0.1);
    Vec2 q = p;
    for (int k = 1; k <= 20; ++k) {
      q += 0.1 * v;
      CHECK((Vec2(pred.positions.col(k)) - q).norm() < 1e-12);
    }
  }
}

TEST_CASE("terminal cost") {
  CHECK(terminal_cost({1, 1}, {0, 0}, {1, 1}, 100.0) == 0.0);
  CHECK(terminal_cost({0, 0}, {0, 0}, {2, 0}, 100.0) == Catch::Approx(100.0));
  const double far = terminal_cost({1, 0}, {0, 0}, {2, 0}, 100.0);
  const double near = terminal_cost({1.5, 0}, {0, 0}, {2, 0}, 100.0);
  CHECK(far == Catch::Approx(4.0 * near));
  CHECK_THROWS_AS(terminal_cost({1, 0}, {2, 0}, {2, 0}, 100.0), DegenerateReference);
}

TEST_CASE("stage cost and collision margin") {
  CHECK(stage_cost({0.0, 0.0}, 0.1) == 0.0);
  CHECK(stage_cost({1.0, 2.0}, 1.0) == Catch::Approx(5.0));
  CHECK(stage_cost({1.0, 2.0}, 0.1) == stage_cost({-1.0, -2.0}, 0.1));
  CHECK(collision_margin({0, 0}, {1, 0}, 0.3, 0.3) == Catch::Approx(0.4));
  CHECK(collision_margin({0, 0}, {0.6, 0}, 0.3, 0.3) == Catch::Approx(0.0).margin(1e-15));
  CHECK(collision_margin({0, 0}, {0.5, 0}, 0.3, 0.3) < 0.0);
}

TEST_CASE("free-space solve reaches toward the reference") {
  OcpProblem prob;
  prob.params = default_mpc();
  prob.x0 << 0, 0, 0, 0, 0;
  prob.p_ref = {1.0, 0.0};
  const OcpSolution sol = solve_ocp(prob, 0.3);
  CHECK(sol.status == SolveStatus::Optimal);
  const Vec2 pN{sol.states.back()(0), sol.states.back()(1)};
  CHECK((pN - prob.p_ref).norm() < 1.0);  // strictly closer than the start
  for (const auto& u : sol.controls) {
    CHECK(std::abs(u.linear_accel) <= prob.params.limits.a_max);
    CHECK(std::abs(u.angular_accel) <= prob.params.limits.alpha_max);
  }
}

TEST_CASE("reference at the start point yields a null plan") {
  OcpProblem prob;
  prob.params = default_mpc();
  prob.x0 << 0.5, -0.25, 0.3, 0, 0;
  prob.p_ref = {0.5, -0.25};
  const OcpSolution sol = solve_ocp(prob, 0.3);
  CHECK(sol.objective < 1e-6);
  for (const auto& u : sol.controls) {
    CHECK(std::abs(u.linear_accel) < 1e-3);
    CHECK(std::abs(u.angular_accel) < 1e-3);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng = make_rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const OcpProblem prob = random_problem(rng);
    const ShootingSolver solver(prob, 0.3);
    Eigen::VectorXd z(2 * prob.params.horizon);
    for (int i = 0; i < z.size(); ++i) z(i) = uniform(rng, -1.5, 1.5);
    const double mu = 50.0;
    const Eigen::VectorXd g = solver.gradient(z, mu);
    Eigen::VectorXd g_fd(z.size());
    const double h = 1e-6;
    for (int i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      g_fd(i) = (solver.penalized(zp, mu) - solver.penalized(zm, mu)) / (2 * h);
    }
    const double rel = (g - g_fd).norm() / std::max(1.0, g.norm());
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("non-infeasible solutions pass the independent constraint audit") {
  Rng rng = make_rng(4242);
  int feasible = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const OcpProblem prob = random_problem(rng);
    const OcpSolution sol = solve_ocp(prob, 0.3);
    if (sol.status == SolveStatus::Infeasible) continue;
    ++feasible;
    const double margin = audit_min_margin(prob, sol, 0.3);
    INFO("trial " << trial << " status " << status_name(sol.status) << " margin " << margin);
    CHECK(margin > -prob.params.constraint_tol);
  }
  CHECK(feasible > 30);  // most random instances should be solvable
}

TEST_CASE("warm-started resolve of an identical problem does not regress") {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const OcpProblem prob = random_problem(rng, 3);
    const OcpSolution first = solve_ocp(prob, 0.3);
    const OcpSolution second = solve_ocp(prob, 0.3, first);
    if (first.status == SolveStatus::Infeasible) continue;
    CHECK(second.objective <= first.objective + 1e-8);
  }
}

TEST_CASE("ringed ego: infeasible or fully audited margins") {
  OcpProblem prob;
  prob.params = default_mpc();
  prob.x0 << 0, 0, 0, 0, 0;
  prob.p_ref = {3.0, 0.0};
  const double ring_r = 0.3 + 0.3 + 0.01;
  for (int i = 0; i < 6; ++i) {
    const double ang = 2.0 * M_PI * i / 6.0;
    prob.predictions.push_back(predict_agent({ring_r * std::cos(ang), ring_r * std::sin(ang)},
                                             {0.0, 0.0}, 0.3, prob.params.horizon,
                                             prob.params.tau));
  }
  const OcpSolution sol = solve_ocp(prob, 0.3);
  if (sol.status != SolveStatus::Infeasible) {
    const double margin = audit_min_margin(prob, sol, 0.3);
    CHECK(margin > -prob.params.constraint_tol);
  } else {
    SUCCEED("infeasible as expected");
  }
}

TEST_CASE("fallback_decelerate") {
  Limits lim;
  SECTION("already stopped") {
    AgentState s;
    const ControlInput u = fallback_decelerate(s, 0.1, lim);
    CHECK(u.linear_accel == 0.0);
    CHECK(u.angular_accel == 0.0);
  }
  SECTION("exact one-step stop within the limit") {
    AgentState s;
    s.forward_velocity = 0.1;
    const ControlInput u = fallback_decelerate(s, 0.1, lim);
    CHECK(u.linear_accel == Catch::Approx(-1.0));
  }
  SECTION("saturates at a_max") {
    AgentState s;
    s.forward_velocity = 1.5;
    const ControlInput u = fallback_decelerate(s, 0.1, lim);
    CHECK(u.linear_accel == Catch::Approx(-2.0));
  }
}

TEST_CASE("planner: empty environment accelerates toward the reference") {
  MpcPlanner planner(default_mpc());
  AgentState ego;
  const auto res = planner.plan(ego, {}, {2.0, 0.0});
  CHECK(res.solution.status != SolveStatus::Infeasible);
  CHECK(res.control.linear_accel > 0.1);
  CHECK(res.control.linear_accel == res.solution.controls.front().linear_accel);
}

TEST_CASE("planner: blocked ego falls back to deceleration") {
  MpcParams params = default_mpc();
  MpcPlanner planner(params);
  AgentState ego;
  ego.forward_velocity = 0.8;
  // Sealed ring just outside contact: any reachable trajectory is in conflict.
  std::vector<NeighborView> ring;
  for (int i = 0; i < 8; ++i) {
    const double ang = 2.0 * M_PI * i / 8.0;
    ring.push_back({{0.62 * std::cos(ang), 0.62 * std::sin(ang)}, {0.0, 0.0}, 0.3});
  }
  const auto res = planner.plan(ego, ring, {3.0, 0.0});
  REQUIRE(res.solution.status == SolveStatus::Infeasible);
  const ControlInput expect = fallback_decelerate(ego, params.tau, params.limits);
  CHECK(res.control.linear_accel == expect.linear_accel);
  CHECK(res.control.angular_accel == expect.angular_accel);
}

TEST_CASE("planner: first control of the returned solution is what executes") {
  Rng rng = make_rng(31);
  MpcPlanner planner(default_mpc());
  AgentState ego;
  std::vector<NeighborView> others;
  for (int i = 0; i < 6; ++i) {
    Vec2 pos;
    do {
      pos = {uniform(rng, -4, 4), uniform(rng, -4, 4)};
    } while (pos.norm() < 0.7);
    others.push_back({pos, {uniform(rng, -1, 1), uniform(rng, -1, 1)}, 0.3});
  }
  const auto res = planner.plan(ego, others, {uniform(rng, -3, 3), uniform(rng, -3, 3)});
  if (res.solution.status != SolveStatus::Infeasible) {
    CHECK(res.control.linear_accel == res.solution.controls.front().linear_accel);
    CHECK(res.control.angular_accel == res.solution.controls.front().angular_accel);
  }
}
