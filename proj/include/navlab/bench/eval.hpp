#pragma once

#include <future>
#include <optional>
#include <sstream>

#include "navlab/rl/controller.hpp"
#include "navlab/sim/scenario.hpp"
#include "navlab/sim/trajectory_log.hpp"

namespace navlab {

enum class Method { GoMpc, MpcOnly, RvoEgo };
enum class EvalSetting { Mixed, Homogeneous };
enum class Outcome { Success, Collision, Timeout };

struct EmptyResults : std::runtime_error {
  EmptyResults() : std::runtime_error("no episode results to summarize") {}
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::GoMpc: return "gompc";
    case Method::MpcOnly: return "mpconly";
    case Method::RvoEgo: return "rvoego";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "gompc") return Method::GoMpc;
  if (s == "mpconly") return Method::MpcOnly;
  if (s == "rvoego") return Method::RvoEgo;
  throw ConfigError("unknown method: " + s);
}

struct EvalOptions {
  Method method = Method::MpcOnly;
  EvalSetting setting = EvalSetting::Mixed;
  int n_agents = 6;  // total agents, ego included; <= 1 runs the ego alone
  int n_runs = 50;
  std::uint64_t base_seed = 0;
  std::optional<ScenarioKind> kind;               // nullopt: random kind per episode
  std::optional<BehaviorKind> forced_behavior;    // force every non-ego behavior
  const PolicyParams* policy = nullptr;           // required for GoMpc
  SimParams sim;
  MpcParams mpc;
  int jobs = 1;
  std::ostream* traj_out = nullptr;  // optional trajectory log sink
};

struct EpisodeResult {
  std::string method;
  ScenarioKind kind = ScenarioKind::Random;
  int n_agents = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  double time_s = 0.0;
  double distance = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  int steps = 0;
};

struct MethodSummary {
  std::string method;
  int n_agents = 0;
  int n_runs = 0;
  int successes = 0;
  double time_mean = 0.0, time_std = 0.0;
  double dist_mean = 0.0, dist_std = 0.0;
  double failure_pct = 0.0, collision_pct = 0.0, timeout_pct = 0.0;
};

// Success-only means per the reporting convention; failure split into
// collision and deadlock (timeout).
inline MethodSummary summarize(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw EmptyResults();
  MethodSummary s;
  s.method = results.front().method;
  s.n_agents = results.front().n_agents;
  s.n_runs = static_cast<int>(results.size());
  std::vector<double> times, dists;
  int collisions = 0, timeouts = 0;
  for (const auto& r : results) {
    switch (r.outcome) {
      case Outcome::Success:
        times.push_back(r.time_s);
        dists.push_back(r.distance);
        break;
      case Outcome::Collision: ++collisions; break;
      case Outcome::Timeout: ++timeouts; break;
    }
  }
  s.successes = static_cast<int>(times.size());
  auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    if (xs.size() < 2) return;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / double(xs.size() - 1));
  };
  mean_std(times, s.time_mean, s.time_std);
  mean_std(dists, s.dist_mean, s.dist_std);
  s.collision_pct = 100.0 * collisions / double(s.n_runs);
  s.timeout_pct = 100.0 * timeouts / double(s.n_runs);
  s.failure_pct = s.collision_pct + s.timeout_pct;
  return s;
}

namespace detail {

inline BehaviorTag forced_tag(BehaviorKind kind, Rng& rng, const BehaviorParams& p) {
  BehaviorTag t;
  t.kind = kind;
  switch (kind) {
    case BehaviorKind::Rvo: t.coop = uniform(rng, p.coop_c_min, p.coop_c_max); break;
    case BehaviorKind::ConstVel: break;
    case BehaviorKind::Sinusoid:
      t.freq = uniform(rng, p.sinusoid_freq_min, p.sinusoid_freq_max);
      t.amplitude = uniform(rng, p.sinusoid_amp_min, p.sinusoid_amp_max);
      break;
    case BehaviorKind::Circular:
      t.radius = uniform(rng, p.circular_radius_min, p.circular_radius_max);
      t.speed = uniform(rng, p.circular_speed_min, p.circular_speed_max);
      t.direction = bernoulli(rng, 0.5) ? 1 : -1;
      break;
  }
  return t;
}

// Per-agent controller used in homogeneous runs and for the ego.
struct AgentController {
  Method method;
  std::optional<GoMpcController> gompc;
  std::optional<MpcPlanner> mpc;

  static AgentController make(Method m, const EvalOptions& opts) {
    AgentController c;
    c.method = m;
    if (m == Method::GoMpc) c.gompc.emplace(*opts.policy, opts.mpc);
    if (m == Method::MpcOnly) c.mpc.emplace(opts.mpc);
    return c;
  }
};

struct EpisodeRun {
  EpisodeResult result;
  std::string log_text;
};

inline EpisodeRun run_episode(const EvalOptions& opts, int index) {
  const std::uint64_t seed = opts.base_seed + std::uint64_t(index);
  World w;
  for (int attempt = 0;; ++attempt) {
    Rng rng = fork_rng(seed, attempt);
    const ScenarioKind kind =
        opts.kind ? *opts.kind : static_cast<ScenarioKind>(uniform_int(rng, 0, 3));
    try {
      w = spawn_scenario(kind, std::max(1, opts.n_agents), rng, opts.sim);
      w.seed = seed;
      if (opts.forced_behavior) {
        for (auto& o : w.others) o.behavior = forced_tag(*opts.forced_behavior, rng, opts.sim.behavior);
      }
      break;
    } catch (const SpawnFailure&) {
      if (attempt >= 4) throw;
    }
  }

  EpisodeRun run;
  EpisodeResult& res = run.result;
  res.method = method_name(opts.method);
  res.kind = w.kind;
  res.n_agents = std::max(1, opts.n_agents);
  res.seed = seed;

  std::ostringstream log_stream;
  std::optional<TrajectoryWriter> writer;
  if (opts.traj_out) writer.emplace(log_stream, /*write_header=*/false);

  AgentController ego_ctl = AgentController::make(opts.method, opts);

  // Homogeneous: every non-ego agent runs the evaluated method as a
  // second-order unicycle (velocity-commanded for the reactive baseline).
  const bool homogeneous = opts.setting == EvalSetting::Homogeneous;
  std::vector<AgentController> other_ctls;
  if (homogeneous)
    for (std::size_t i = 0; i < w.others.size(); ++i)
      other_ctls.push_back(AgentController::make(opts.method, opts));

  const double v_ref = opts.sim.limits.v_max;
  auto rvo_command = [&](const AgentState& self, const Vec2& goal,
                         const std::vector<AgentState>& neighbors) {
    return rvo_step(self, goal, neighbors, 0.5, opts.sim.behavior, opts.sim.limits,
                    opts.sim.goal_tolerance);
  };

  auto agent_control = [&](AgentController& ctl, const AgentState& self, const Vec2& goal,
                           const std::vector<OtherAgent>& others) -> ControlInput {
    if (ctl.method == Method::GoMpc) return ctl.gompc->step(self, goal, others, v_ref, nullptr).control;
    return ctl.mpc->plan(self, neighbor_views(others), goal).control;
  };

  std::optional<EpisodeEvent> event;
  while (!event) {
    if (writer) writer->record(index, w);
    const Vec2 prev_pos = w.ego.position;

    if (homogeneous && !w.others.empty()) {
      // Snapshot, then simultaneous advance of everyone.
      const AgentState ego_snap = w.ego;
      std::vector<OtherAgent> snap = w.others;
      std::vector<AgentState> all(1 + snap.size());
      all[0] = ego_snap;
      for (std::size_t i = 0; i < snap.size(); ++i) all[i + 1] = snap[i].state;

      auto views_excluding = [&](std::size_t self_idx) {
        std::vector<OtherAgent> views;
        views.reserve(all.size() - 1);
        for (std::size_t j = 0; j < all.size(); ++j) {
          if (j == self_idx) continue;
          OtherAgent o;
          o.state = all[j];
          views.push_back(o);
        }
        return views;
      };

      if (opts.method == Method::RvoEgo) {
        std::vector<Vec2> cmds(all.size());
        for (std::size_t j = 0; j < all.size(); ++j) {
          std::vector<AgentState> nbs;
          for (std::size_t k = 0; k < all.size(); ++k)
            if (k != j) nbs.push_back(all[k]);
          const Vec2 goal = j == 0 ? w.ego_goal : snap[j - 1].goal;
          cmds[j] = rvo_command(all[j], goal, nbs);
        }
        apply_velocity_command(w.ego, cmds[0], w.params.tau);
        for (std::size_t i = 0; i < w.others.size(); ++i)
          apply_velocity_command(w.others[i].state, cmds[i + 1], w.params.tau);
      } else {
        const ControlInput ego_u = agent_control(ego_ctl, ego_snap, w.ego_goal, views_excluding(0));
        std::vector<ControlInput> us(w.others.size());
        for (std::size_t i = 0; i < w.others.size(); ++i)
          us[i] = agent_control(other_ctls[i], snap[i].state, snap[i].goal, views_excluding(i + 1));
        w.ego = step_dynamics(w.ego, ego_u, w.params.tau, w.params.limits);
        for (std::size_t i = 0; i < w.others.size(); ++i)
          w.others[i].state = step_dynamics(snap[i].state, us[i], w.params.tau, w.params.limits);
      }
      w.clock += 1;
      event = detect_event(w);
    } else if (opts.method == Method::RvoEgo) {
      std::vector<AgentState> nbs;
      for (const auto& o : w.others) nbs.push_back(o.state);
      event = step_world_velocity(w, rvo_command(w.ego, w.ego_goal, nbs));
    } else {
      event = step_world(w, agent_control(ego_ctl, w.ego, w.ego_goal, w.others));
    }

    res.distance += (w.ego.position - prev_pos).norm();
    if (!w.others.empty()) res.min_clearance = std::min(res.min_clearance, min_agent_distance(w));
  }

  if (writer) writer->record(index, w, &*event);
  res.steps = w.clock;
  res.time_s = w.clock * w.params.tau;
  switch (event->kind) {
    case EventKind::GoalReached: res.outcome = Outcome::Success; break;
    case EventKind::Collision: res.outcome = Outcome::Collision; break;
    case EventKind::Timeout: res.outcome = Outcome::Timeout; break;
  }
  run.log_text = log_stream.str();
  return run;
}

}  // namespace detail

// Runs n_runs episodes with per-episode seeds base_seed + index. Episodes are
// independent; `jobs` > 1 fans them out over threads with results and logs
// reassembled in index order so output bytes do not depend on scheduling.
inline std::vector<EpisodeResult> run_eval(const EvalOptions& opts) {
  if (opts.method == Method::GoMpc && opts.policy == nullptr)
    throw std::invalid_argument("run_eval: GoMpc requires a policy");
  std::vector<detail::EpisodeRun> runs(opts.n_runs);
  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    for (int i = 0; i < opts.n_runs; ++i) runs[i] = detail::run_episode(opts, i);
  } else {
    std::vector<std::future<void>> futs;
    for (int worker = 0; worker < jobs; ++worker) {
      futs.push_back(std::async(std::launch::async, [&, worker] {
        for (int i = worker; i < opts.n_runs; i += jobs) runs[i] = detail::run_episode(opts, i);
      }));
    }
    for (auto& f : futs) f.get();
  }

  std::vector<EpisodeResult> results;
  results.reserve(runs.size());
  if (opts.traj_out && opts.n_runs > 0) *opts.traj_out << kTrajectoryHeader << "\n";
  for (auto& r : runs) {
    if (opts.traj_out) *opts.traj_out << r.log_text;
    results.push_back(std::move(r.result));
  }
  return results;
}

}  // namespace navlab
