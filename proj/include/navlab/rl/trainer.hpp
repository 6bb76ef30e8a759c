#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "navlab/nn/checkpoint.hpp"
#include "navlab/rl/controller.hpp"
#include "navlab/rl/ppo.hpp"
#include "navlab/rl/reward.hpp"
#include "navlab/sim/scenario.hpp"
#include "navlab/sim/trajectory_log.hpp"

namespace navlab {

struct CurriculumStage {
  int start_episode = 0;
  int max_agents = 2;  // total agents, ego included
};

// "0:2,600:4,1200:6" -> stages sorted by start episode.
inline std::vector<CurriculumStage> parse_curriculum(const std::string& s) {
  std::vector<CurriculumStage> stages;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("curriculum entries must be episode:agents");
    CurriculumStage st;
    st.start_episode = std::stoi(item.substr(0, colon));
    st.max_agents = std::stoi(item.substr(colon + 1));
    stages.push_back(st);
  }
  if (stages.empty()) throw ConfigError("curriculum must have at least one stage");
  std::sort(stages.begin(), stages.end(),
            [](const CurriculumStage& a, const CurriculumStage& b) {
              return a.start_episode < b.start_episode;
            });
  return stages;
}

inline int curriculum_max_agents(const std::vector<CurriculumStage>& stages, int episode) {
  int m = stages.front().max_agents;
  for (const auto& st : stages)
    if (episode >= st.start_episode) m = st.max_agents;
  return m;
}

struct TrainConfig {
  SimParams sim;
  MpcParams mpc;
  NetConfig net;
  RewardConfig reward;
  PpoSettings ppo;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int rollout_window = 2048;
  int warmstart_epochs = 10;
  double warmstart_lr = 1e-3;
  int n_warmstart_episodes = 200;
  int n_episodes = 2000;
  std::vector<CurriculumStage> curriculum{{0, 2}};
  int curve_window = 100;
  int checkpoint_every = 500;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: nothing written to disk

  static TrainConfig from_config(const Config& c, std::uint64_t seed, std::string out_dir = "") {
    TrainConfig t;
    t.sim = SimParams::from_config(c);
    t.mpc = MpcParams::from_config(c);
    t.net = NetConfig::from_config(c);
    t.reward = RewardConfig::from_config(c);
    t.ppo.clip = c.get_double("clip");
    t.ppo.lr = c.get_double("lr");
    t.ppo.value_coef = c.get_double("value_coef");
    t.ppo.entropy_coef = c.get_double("entropy_coef");
    t.ppo.grad_clip = c.get_double("grad_clip");
    t.ppo.epochs = c.get_int("ppo_epochs");
    t.ppo.minibatch = c.get_int("sgd_minibatch");
    t.gamma = c.get_double("gamma");
    t.gae_lambda = c.get_double("gae_lambda");
    t.rollout_window = c.get_int("rollout_window");
    t.warmstart_epochs = c.get_int("warmstart_epochs");
    t.warmstart_lr = c.get_double("warmstart_lr");
    t.n_warmstart_episodes = c.get_int("n_warmstart_episodes");
    t.n_episodes = c.get_int("n_episodes");
    t.curriculum = parse_curriculum(c.get_string("curriculum"));
    t.curve_window = c.get_int("curve_window");
    t.checkpoint_every = c.get_int("checkpoint_every");
    t.seed = seed;
    t.out_dir = std::move(out_dir);
    return t;
  }
};

struct CurvePoint {
  int episode = 0;  // completed episodes at emission
  double reward_mean = 0.0;
  double failure_pct = 0.0;
  double collision_pct = 0.0;
  double timeout_pct = 0.0;
  int max_agents = 0;
};

struct EpisodeStat {
  double reward_sum = 0.0;
  EventKind outcome = EventKind::Timeout;
  int steps = 0;
  int agents = 0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curves;
  std::vector<EpisodeStat> episodes;
  std::vector<SupervisedStats> warmstart_stats;  // one entry per supervised window
  std::vector<PpoStats> ppo_stats;               // one entry per PPO window
  bool failed = false;
  std::string failure_reason;
};

inline void write_curves(const std::vector<CurvePoint>& curves, const std::string& path) {
  std::ofstream out(path);
  out << "episode,reward_mean,failure_pct,collision_pct,timeout_pct,max_agents\n";
  for (const auto& c : curves)
    out << c.episode << ',' << format_double(c.reward_mean) << ',' << format_double(c.failure_pct)
        << ',' << format_double(c.collision_pct) << ',' << format_double(c.timeout_pct) << ','
        << c.max_agents << '\n';
}

// PPO-MPC training: supervised warm start imitating the MPC expert toward the
// final goal, then clipped PPO on the subgoal policy, with the agent-count
// curriculum. Fully reproducible from the seed.
inline TrainResult train(const TrainConfig& cfg) {
  TrainResult result;
  Rng init_rng = fork_rng(cfg.seed, 0);
  PolicyParams params = PolicyParams::init(cfg.net, init_rng);
  AdamState adam(cfg.net);
  Rng ppo_rng = fork_rng(cfg.seed, 1);

  result.params = params;
  if (cfg.n_episodes <= 0) return result;

  const RewardConfig& rc = cfg.reward;
  const double action_ball = cfg.mpc.horizon * cfg.mpc.tau * cfg.mpc.limits.v_max;

  int episode = 0;  // completed episodes
  auto spawn_episode = [&](World& w) {
    const int max_total = curriculum_max_agents(cfg.curriculum, episode);
    for (int attempt = 0;; ++attempt) {
      Rng ep_rng = fork_rng(cfg.seed, 1000000 + std::uint64_t(episode) * 16 + attempt);
      const ScenarioKind kind = static_cast<ScenarioKind>(uniform_int(ep_rng, 0, 3));
      const int total = uniform_int(ep_rng, std::min(2, max_total), max_total);
      try {
        w = spawn_scenario(kind, total, ep_rng, cfg.sim);
        w.seed = cfg.seed;
        return;
      } catch (const SpawnFailure&) {
        if (attempt >= 4) throw;
      }
    }
  };

  World w;
  spawn_episode(w);
  MpcPlanner planner(cfg.mpc);
  HiddenState hidden = HiddenState::zero(cfg.net);
  Rng action_rng = fork_rng(cfg.seed, 2);
  double episode_reward = 0.0;

  std::vector<TransitionRecord> buffer;
  buffer.reserve(cfg.rollout_window);

  auto flush_window = [&](bool warm_phase) {
    if (buffer.empty()) return true;
    double tail_bootstrap = 0.0;
    const TransitionRecord& last = buffer.back();
    if (!last.done && !last.truncated)
      tail_bootstrap = forward(params, last.next_obs, hidden).value;
    prepare_advantages(buffer, tail_bootstrap, cfg.gamma, cfg.gae_lambda);
    if (warm_phase) {
      std::vector<const TransitionRecord*> batch;
      batch.reserve(buffer.size());
      for (const auto& t : buffer)
        if (t.has_expert) batch.push_back(&t);
      result.warmstart_stats.push_back(supervised_update(batch, params, adam, cfg.warmstart_lr,
                                                         cfg.ppo.grad_clip, cfg.ppo.minibatch,
                                                         cfg.warmstart_epochs));
    } else {
      normalize_advantages(buffer);
      const PpoStats stats = ppo_update(buffer, params, adam, cfg.ppo, ppo_rng);
      result.ppo_stats.push_back(stats);
      if (stats.aborted) {
        result.failed = true;
        result.failure_reason = "non-finite loss during PPO update";
        buffer.clear();
        return false;
      }
    }
    buffer.clear();
    return true;
  };

  const bool save_artifacts = !cfg.out_dir.empty();
  if (save_artifacts) std::filesystem::create_directories(cfg.out_dir);

  bool warm_phase = cfg.n_warmstart_episodes > 0;
  while (episode < cfg.n_episodes && !result.failed) {
    TransitionRecord rec;
    rec.obs = make_observation(w);
    rec.hidden = hidden;
    const ForwardOut out = forward(params, rec.obs, hidden);
    rec.value = out.value;

    ControlInput control;
    if (warm_phase) {
      const auto res = planner.plan(w.ego, neighbor_views(w.others), w.ego_goal);
      control = res.control;
      if (res.solution.status != SolveStatus::Infeasible) {
        const StateVec& xN = res.solution.states.back();
        rec.expert_action = Vec2{xN(0), xN(1)} - w.ego.position;
        rec.has_expert = true;
        rec.action = rec.expert_action;
        rec.log_prob = gaussian_log_prob(rec.action, out.mu, out.sigma);
      }
    } else {
      const ActionSample s = sample_action(out.mu, out.sigma, action_ball, action_rng);
      rec.action = s.raw;
      rec.log_prob = s.log_prob;
      const Vec2 subgoal = w.ego.position + s.projected;
      const auto res = planner.plan(w.ego, neighbor_views(w.others), subgoal);
      control = res.control;
    }

    const Vec2 prev_pos = w.ego.position;
    const auto event = step_world(w, control);
    rec.reward = compute_reward(prev_pos, w.ego.position, w.ego_goal, event, rc);
    rec.next_obs = make_observation(w);
    hidden = out.next;
    episode_reward += rec.reward;

    if (event) {
      rec.done = event->kind != EventKind::Timeout;
      rec.truncated = event->kind == EventKind::Timeout;
      if (rec.truncated) rec.bootstrap_value = forward(params, rec.next_obs, hidden).value;
    }
    buffer.push_back(std::move(rec));

    bool phase_flip = false;
    if (event) {
      result.episodes.push_back(
          {episode_reward, event->kind, w.clock, 1 + static_cast<int>(w.others.size())});
      episode_reward = 0.0;
      ++episode;

      if (episode % cfg.curve_window == 0 || episode == cfg.n_episodes) {
        const int n = std::min<int>(cfg.curve_window, result.episodes.size());
        double rsum = 0;
        int coll = 0, tout = 0;
        for (int i = static_cast<int>(result.episodes.size()) - n;
             i < static_cast<int>(result.episodes.size()); ++i) {
          rsum += result.episodes[i].reward_sum;
          coll += result.episodes[i].outcome == EventKind::Collision;
          tout += result.episodes[i].outcome == EventKind::Timeout;
        }
        result.curves.push_back({episode, rsum / n, 100.0 * (coll + tout) / n, 100.0 * coll / n,
                                 100.0 * tout / n,
                                 curriculum_max_agents(cfg.curriculum, episode)});
      }
      if (save_artifacts && cfg.checkpoint_every > 0 && episode % cfg.checkpoint_every == 0 &&
          episode < cfg.n_episodes) {
        save_params(params, cfg.out_dir + "/checkpoint_ep" + std::to_string(episode) + ".bin");
      }

      if (warm_phase && episode >= cfg.n_warmstart_episodes) phase_flip = true;
      if (episode < cfg.n_episodes) {
        spawn_episode(w);
        planner.reset();
        hidden = HiddenState::zero(cfg.net);
      }
    }

    if (static_cast<int>(buffer.size()) >= cfg.rollout_window || phase_flip ||
        episode >= cfg.n_episodes) {
      if (!flush_window(warm_phase)) break;
      if (phase_flip) {
        warm_phase = false;
        adam = AdamState(cfg.net);  // fresh optimizer state for the PPO phase
      }
    }
  }

  result.params = params;
  if (save_artifacts) {
    save_params(result.params, cfg.out_dir + "/checkpoint_final.bin");
    write_curves(result.curves, cfg.out_dir + "/curves.csv");
  }
  return result;
}

}  // namespace navlab
