#include <catch2/catch_amalgamated.hpp>

#include "navlab/rl/trainer.hpp"

using namespace navlab;

namespace {

// O(T^2) direct-summation oracle:
// A_t = sum_l (gamma*lambda)^l delta_{t+l}, chains broken at done flags.
std::vector<double> gae_oracle(const std::vector<double>& r, const std::vector<double>& v,
                               const std::vector<std::uint8_t>& dones, double gamma,
                               double lambda) {
  const std::size_t T = r.size();
  std::vector<double> adv(T);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = 0.0, w = 1.0;
    for (std::size_t s = t; s < T; ++s) {
      const double not_done = dones[s] ? 0.0 : 1.0;
      const double delta = r[s] + gamma * not_done * v[s + 1] - v[s];
      acc += w * delta;
      if (dones[s]) break;
      w *= gamma * lambda;
    }
    adv[t] = acc;
  }
  return adv;
}

NetConfig tiny_net() {
  NetConfig cfg;
  cfg.hidden = 8;
  cfg.trunk = 12;
  return cfg;
}

Observation random_obs(const NetConfig& cfg, int n_neighbors, Rng& rng) {
  Observation obs;
  obs.ego.resize(cfg.ego_dim);
  for (int i = 0; i < cfg.ego_dim; ++i) obs.ego(i) = uniform(rng, -2, 2);
  for (int n = 0; n < n_neighbors; ++n) {
    Eigen::VectorXd row(cfg.neighbor_dim);
    for (int i = 0; i < cfg.neighbor_dim; ++i) row(i) = uniform(rng, -2, 2);
    obs.neighbors.push_back(std::move(row));
  }
  return obs;
}

// Transitions whose log-probs genuinely come from the given parameters.
std::vector<TransitionRecord> sampled_buffer(const PolicyParams& p, int n, Rng& rng) {
  std::vector<TransitionRecord> buf(n);
  for (auto& t : buf) {
    t.obs = random_obs(p.cfg, uniform_int(rng, 0, 3), rng);
    t.hidden = HiddenState::zero(p.cfg);
    const ForwardOut out = forward(p, t.obs, t.hidden);
    const ActionSample s = sample_action(out.mu, out.sigma, 3.0, rng);
    t.action = s.raw;
    t.log_prob = s.log_prob;
    t.value = out.value;
    t.reward = uniform(rng, -1, 1);
    t.ret = t.value + uniform(rng, -0.5, 0.5);
    t.advantage = uniform(rng, -1, 1);
  }
  return buf;
}

}  // namespace

TEST_CASE("compute_reward branches") {
  RewardConfig rc;
  const Vec2 goal{2.0, 0.0};
  const EpisodeEvent goal_ev{EventKind::GoalReached, -1, 10};
  const EpisodeEvent coll_ev{EventKind::Collision, 0, 10};
  const EpisodeEvent tout_ev{EventKind::Timeout, -1, 10};
  CHECK(compute_reward({0, 0}, {0.1, 0}, goal, goal_ev, rc) == 3.0);
  CHECK(compute_reward({0, 0}, {0.1, 0}, goal, coll_ev, rc) == -10.0);

  rc.variant = RewardVariant::Sparse;
  CHECK(compute_reward({0, 0}, {0.1, 0}, goal, std::nullopt, rc) == 0.0);
  rc.variant = RewardVariant::Time;
  CHECK(compute_reward({0, 0}, {0.1, 0}, goal, std::nullopt, rc) == -0.01);
  CHECK(compute_reward({0, 0}, {0.1, 0}, goal, tout_ev, rc) == -0.01);
  rc.variant = RewardVariant::Progress;
  CHECK(compute_reward({0, 0}, {0.15, 0}, goal, std::nullopt, rc) == Catch::Approx(0.0015));
}

TEST_CASE("gae recursion base cases") {
  SECTION("lambda = 0 gives one-step TD errors") {
    const std::vector<double> r{1.0, -0.5, 2.0};
    const std::vector<double> v{0.3, 0.1, -0.2, 0.4};
    const std::vector<std::uint8_t> d{0, 0, 0};
    const GaeResult g = gae(r, v, d, 0.9, 0.0);
    for (int t = 0; t < 3; ++t)
      CHECK(g.advantages[t] == Catch::Approx(r[t] + 0.9 * v[t + 1] - v[t]).margin(1e-12));
  }
  SECTION("lambda = 1, gamma = 1, zero values gives suffix sums") {
    const std::vector<double> r{1.0, 2.0, 3.0};
    const std::vector<double> v{0, 0, 0, 0};
    const std::vector<std::uint8_t> d{0, 0, 0};
    const GaeResult g = gae(r, v, d, 1.0, 1.0);
    CHECK(g.advantages[0] == Catch::Approx(6.0));
    CHECK(g.advantages[1] == Catch::Approx(5.0));
    CHECK(g.advantages[2] == Catch::Approx(3.0));
  }
  SECTION("length mismatch throws") {
    CHECK_THROWS_AS(gae({1.0}, {0.0}, {0}, 0.9, 0.9), LengthMismatch);
    CHECK_THROWS_AS(gae({1.0}, {0.0, 0.0}, {0, 0}, 0.9, 0.9), LengthMismatch);
  }
}

TEST_CASE("gae matches the O(T^2) direct-summation oracle") {
  Rng rng = make_rng(20);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 50;
    std::vector<double> r(T), v(T + 1);
    std::vector<std::uint8_t> d(T);
    for (int t = 0; t < T; ++t) {
      r[t] = uniform(rng, -2, 2);
      v[t] = uniform(rng, -2, 2);
      d[t] = bernoulli(rng, 0.08);
    }
    v[T] = uniform(rng, -2, 2);
    const double gamma = uniform(rng, 0.9, 1.0), lambda = uniform(rng, 0.0, 1.0);
    const GaeResult g = gae(r, v, d, gamma, lambda);
    const auto oracle = gae_oracle(r, v, d, gamma, lambda);
    for (int t = 0; t < T; ++t) {
      worst = std::max(worst, std::abs(g.advantages[t] - oracle[t]));
      worst = std::max(worst, std::abs(g.returns[t] - (oracle[t] + v[t])));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("advantage normalization hits zero mean unit variance") {
  Rng rng = make_rng(21);
  std::vector<TransitionRecord> buf(512);
  for (auto& t : buf) t.advantage = uniform(rng, -3, 7);
  normalize_advantages(buf);
  double mean = 0.0;
  for (const auto& t : buf) mean += t.advantage;
  mean /= buf.size();
  double var = 0.0;
  for (const auto& t : buf) var += (t.advantage - mean) * (t.advantage - mean);
  var /= buf.size();
  CHECK(std::abs(mean) < 1e-8);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
}

TEST_CASE("ppo: zero advantages leave parameters untouched") {
  Rng rng = make_rng(22);
  PolicyParams p = PolicyParams::init(tiny_net(), rng);
  const PolicyParams before = p;
  auto buf = sampled_buffer(p, 16, rng);
  for (auto& t : buf) {
    t.advantage = 0.0;
    t.ret = forward(p, t.obs, t.hidden).value;  // zero value error too
  }
  PpoSettings s;
  s.entropy_coef = 0.0;
  s.minibatch = 8;
  AdamState adam(p.cfg);
  const PpoStats stats = ppo_update(buf, p, adam, s, rng);
  CHECK_FALSE(stats.aborted);
  CHECK(stats.policy_loss == Catch::Approx(0.0).margin(1e-12));
  PolicyParams diff = p;
  diff.add_scaled(before, -1.0);
  CHECK(std::sqrt(diff.squared_norm()) == 0.0);
}

TEST_CASE("ppo: identical parameters give unit ratios everywhere") {
  Rng rng = make_rng(23);
  PolicyParams p = PolicyParams::init(tiny_net(), rng);
  auto buf = sampled_buffer(p, 32, rng);
  PpoSettings s;
  s.lr = 0.0;  // evaluate without moving
  s.epochs = 1;
  s.minibatch = 32;
  AdamState adam(p.cfg);
  const PpoStats stats = ppo_update(buf, p, adam, s, rng);
  CHECK_FALSE(stats.aborted);
  CHECK(stats.approx_kl == Catch::Approx(0.0).margin(1e-12));
  CHECK(stats.clip_fraction == 0.0);
}

TEST_CASE("ppo: a positive-advantage action becomes more likely") {
  Rng rng = make_rng(24);
  PolicyParams p = PolicyParams::init(tiny_net(), rng);
  auto buf = sampled_buffer(p, 1, rng);
  buf[0].advantage = 1.0;
  buf[0].ret = buf[0].value;
  const double before = [&] {
    const ForwardOut out = forward(p, buf[0].obs, buf[0].hidden);
    return gaussian_log_prob(buf[0].action, out.mu, out.sigma);
  }();
  PpoSettings s;
  s.lr = 1e-3;
  s.epochs = 1;
  s.minibatch = 1;
  s.entropy_coef = 0.0;
  AdamState adam(p.cfg);
  ppo_update(buf, p, adam, s, rng);
  const ForwardOut out = forward(p, buf[0].obs, buf[0].hidden);
  CHECK(gaussian_log_prob(buf[0].action, out.mu, out.sigma) > before);
}

TEST_CASE("ppo: non-finite loss aborts and restores parameters") {
  Rng rng = make_rng(25);
  PolicyParams p = PolicyParams::init(tiny_net(), rng);
  const PolicyParams before = p;
  auto buf = sampled_buffer(p, 8, rng);
  buf[3].log_prob = std::numeric_limits<double>::quiet_NaN();
  PpoSettings s;
  s.minibatch = 8;
  AdamState adam(p.cfg);
  const PpoStats stats = ppo_update(buf, p, adam, s, rng);
  CHECK(stats.aborted);
  PolicyParams diff = p;
  diff.add_scaled(before, -1.0);
  CHECK(std::sqrt(diff.squared_norm()) == 0.0);
}

TEST_CASE("supervised warm start") {
  Rng rng = make_rng(26);
  SECTION("zero residual batch produces zero policy loss") {
    PolicyParams p = PolicyParams::zeros(tiny_net());  // mu identically zero
    std::vector<TransitionRecord> store(8);
    std::vector<const TransitionRecord*> batch;
    for (auto& t : store) {
      t.obs = random_obs(p.cfg, 1, rng);
      t.hidden = HiddenState::zero(p.cfg);
      t.expert_action = {0.0, 0.0};
      t.has_expert = true;
      t.ret = 0.0;
      batch.push_back(&t);
    }
    AdamState adam(p.cfg);
    const SupervisedStats stats = supervised_update(batch, p, adam, 1e-3, 0.5, 8);
    CHECK(stats.policy_loss == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("overfitting one batch strictly decreases the policy loss") {
    PolicyParams p = PolicyParams::init(tiny_net(), rng);
    std::vector<TransitionRecord> store(32);
    std::vector<const TransitionRecord*> batch;
    for (auto& t : store) {
      t.obs = random_obs(p.cfg, 2, rng);
      t.hidden = HiddenState::zero(p.cfg);
      t.expert_action = {uniform(rng, -2, 2), uniform(rng, -2, 2)};
      t.has_expert = true;
      t.ret = uniform(rng, -1, 1);
      batch.push_back(&t);
    }
    AdamState adam(p.cfg);
    double prev = std::numeric_limits<double>::infinity();
    int strictly_decreasing = 0;
    for (int step = 0; step < 25; ++step) {
      const SupervisedStats stats = supervised_update(batch, p, adam, 1e-3, 0.5, 32);
      if (stats.policy_loss < prev) ++strictly_decreasing;
      prev = stats.policy_loss;
    }
    CHECK(strictly_decreasing >= 20);
  }
  SECTION("zero learning rate leaves parameters unchanged") {
    PolicyParams p = PolicyParams::init(tiny_net(), rng);
    const PolicyParams before = p;
    std::vector<TransitionRecord> store(4);
    std::vector<const TransitionRecord*> batch;
    for (auto& t : store) {
      t.obs = random_obs(p.cfg, 1, rng);
      t.hidden = HiddenState::zero(p.cfg);
      t.expert_action = {1.0, 1.0};
      t.has_expert = true;
      batch.push_back(&t);
    }
    AdamState adam(p.cfg);
    supervised_update(batch, p, adam, 0.0, 0.5, 4);
    PolicyParams diff = p;
    diff.add_scaled(before, -1.0);
    CHECK(std::sqrt(diff.squared_norm()) == 0.0);
  }
}

TEST_CASE("expert displacement geometry") {
  MpcParams mpc;
  SECTION("free space: expert displacement points at the goal") {
    MpcPlanner planner(mpc);
    AgentState ego;
    const Vec2 goal{1.0, 0.0};
    const auto res = planner.plan(ego, {}, goal);
    REQUIRE(res.solution.status != SolveStatus::Infeasible);
    const StateVec& xN = res.solution.states.back();
    const Vec2 delta = Vec2{xN(0), xN(1)} - ego.position;
    CHECK(delta.norm() <= mpc.horizon * mpc.tau * mpc.limits.v_max + 1e-9);
    CHECK(delta.normalized().dot(goal.normalized()) > 0.99);
  }
  SECTION("a blockade bends the expert displacement off the goal bearing") {
    MpcPlanner planner(mpc);
    AgentState ego;
    const Vec2 goal{3.0, 0.0};
    // Slightly asymmetric wall between the ego and the goal.
    std::vector<NeighborView> wall;
    for (double y : {-0.7, -0.1, 0.5})
      wall.push_back({{1.5, y}, {0.0, 0.0}, 0.3});
    const auto res = planner.plan(ego, wall, goal);
    REQUIRE(res.solution.status != SolveStatus::Infeasible);
    const StateVec& xN = res.solution.states.back();
    const Vec2 delta = Vec2{xN(0), xN(1)} - ego.position;
    const double angle = std::acos(std::clamp(delta.normalized().dot(Vec2{1.0, 0.0}), -1.0, 1.0));
    CHECK(angle > 5.0 * M_PI / 180.0);
  }
}

TEST_CASE("curriculum parsing and lookup") {
  const auto stages = parse_curriculum("0:2,600:4,1200:6");
  REQUIRE(stages.size() == 3);
  CHECK(curriculum_max_agents(stages, 0) == 2);
  CHECK(curriculum_max_agents(stages, 599) == 2);
  CHECK(curriculum_max_agents(stages, 600) == 4);
  CHECK(curriculum_max_agents(stages, 5000) == 6);
  CHECK_THROWS_AS(parse_curriculum("nonsense"), ConfigError);
}

TEST_CASE("train: null run returns the seeded initialization") {
  Config c = Config::defaults();
  c.set("n_episodes", "0");
  TrainConfig tc = TrainConfig::from_config(c, 77);
  const TrainResult r = train(tc);
  CHECK(r.curves.empty());
  CHECK(r.episodes.empty());
  Rng init_rng = fork_rng(77, 0);
  const PolicyParams expect = PolicyParams::init(tc.net, init_rng);
  PolicyParams diff = r.params;
  diff.add_scaled(expect, -1.0);
  CHECK(std::sqrt(diff.squared_norm()) == 0.0);
}

TEST_CASE("train: identical seeds give bit-identical results") {
  Config c = Config::defaults();
  c.set("n_episodes", "6");
  c.set("n_warmstart_episodes", "3");
  c.set("rollout_window", "128");
  c.set("curve_window", "2");
  c.set("curriculum", "0:2");
  c.set("arena_radius", "3.0");
  c.set("nn_hidden", "8");
  c.set("nn_trunk", "12");
  c.set("sgd_minibatch", "64");
  c.set("mpc_inner_iters", "60");
  c.set("mpc_outer_rounds", "3");

  auto run = [&](std::uint64_t seed) { return train(TrainConfig::from_config(c, seed)); };
  const TrainResult a = run(5);
  const TrainResult b = run(5);
  REQUIRE_FALSE(a.failed);
  REQUIRE(a.curves.size() == b.curves.size());
  for (std::size_t i = 0; i < a.curves.size(); ++i) {
    CHECK(a.curves[i].reward_mean == b.curves[i].reward_mean);
    CHECK(a.curves[i].failure_pct == b.curves[i].failure_pct);
  }
  PolicyParams diff = a.params;
  diff.add_scaled(b.params, -1.0);
  CHECK(std::sqrt(diff.squared_norm()) == 0.0);
  REQUIRE(a.episodes.size() == 6);

  // Terminal bookkeeping: each episode ends in a recorded outcome.
  for (const auto& ep : a.episodes) CHECK(ep.steps > 0);
}
