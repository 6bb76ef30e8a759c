#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "navlab/bench/episodes.hpp"
#include "navlab/bench/stats.hpp"
#include "navlab/bench/tables.hpp"
#include "navlab/nn/checkpoint.hpp"
#include "navlab/rl/trainer.hpp"

#ifndef NAVLAB_BUILD_ID
#define NAVLAB_BUILD_ID "unversioned"
#endif

namespace navlab {

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  std::string command;  // train | eval | ablate | replay | help
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/out";
  std::vector<std::string> overrides;
  std::string log_path;  // replay input
};

namespace detail {

inline std::string config_help_footer() {
  std::ostringstream os;
  os << "Configuration keys (--set key=value overrides the config file):\n";
  std::string section;
  for (const auto& k : config_registry()) {
    if (section != k.section) {
      section = k.section;
      os << "  [" << section << "]\n";
    }
    os << "    " << k.name << " (default " << (k.def[0] ? k.def : "<empty>") << "): " << k.doc
       << "\n";
  }
  return os.str();
}

}  // namespace detail

inline RunConfig parse_cli(int argc, const char* const* argv) {
  RunConfig rc;
  CLI::App app{"navlab: subgoal-recommendation MPC navigation laboratory"};
  app.footer(detail::config_help_footer());
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", rc.config_path, "config file (key = value, [section] headers)");
    cmd->add_option("--seed", rc.seed, "master seed");
    cmd->add_option("--out", rc.out_dir, "output directory");
    cmd->add_option("--set", rc.overrides, "override: key=value (repeatable)");
  };

  CLI::App* train = app.add_subcommand("train", "train a subgoal policy (warm start + PPO)");
  add_common(train);
  CLI::App* eval = app.add_subcommand("eval", "evaluate methods over scenario batches");
  add_common(eval);
  CLI::App* ablate = app.add_subcommand("ablate", "train and compare the three reward variants");
  add_common(ablate);
  CLI::App* replay = app.add_subcommand("replay", "recompute metrics and paths from a trajectory log");
  add_common(replay);
  replay->add_option("log", rc.log_path, "trajectory log file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    rc.command = "help";
    return rc;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    rc.command = "help";
    return rc;
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\nusage: navlab {train|eval|ablate|replay} [--config FILE]" +
                     " [--seed N] [--out DIR] [--set key=value]...");
  }

  for (auto* sub : {train, eval, ablate, replay})
    if (sub->parsed()) rc.command = sub->get_name();
  return rc;
}

namespace detail {

inline Config load_effective_config(const RunConfig& rc) {
  Config c = rc.config_path.empty() ? Config::defaults() : Config::from_file(rc.config_path);
  c.apply_overrides(rc.overrides);
  return c;
}

// Every run records what produced it before any result is written.
inline void write_run_info(const RunConfig& rc, const Config& c) {
  std::filesystem::create_directories(rc.out_dir);
  c.save(rc.out_dir + "/config.cfg");
  std::ofstream info(rc.out_dir + "/run_info.txt");
  info << "command = " << rc.command << "\n";
  info << "seed = " << rc.seed << "\n";
  info << "build = " << NAVLAB_BUILD_ID << "\n";
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::optional<ScenarioKind> scenario_from_config(const Config& c) {
  const std::string s = c.get_string("scenario_kind");
  if (s == "random_kind") return std::nullopt;
  if (s == "symmetric") return ScenarioKind::SymmetricSwap;
  if (s == "asymmetric") return ScenarioKind::AsymmetricSwap;
  if (s == "pairwise") return ScenarioKind::PairwiseSwap;
  if (s == "random") return ScenarioKind::Random;
  throw ConfigError("unknown scenario_kind: " + s);
}

inline std::optional<BehaviorKind> behavior_from_config(const Config& c) {
  const std::string s = c.get_string("forced_behavior");
  if (s.empty()) return std::nullopt;
  if (s == "rvo") return BehaviorKind::Rvo;
  if (s == "constvel") return BehaviorKind::ConstVel;
  if (s == "sinusoid") return BehaviorKind::Sinusoid;
  if (s == "circular") return BehaviorKind::Circular;
  throw ConfigError("unknown forced_behavior: " + s);
}

inline PolicyParams load_policy(const std::string& path) {
  if (path.empty()) throw CheckpointError("gompc evaluation requires checkpoint=<path>");
  try {
    return load_params(path);
  } catch (const CorruptCheckpoint& e) {
    throw CheckpointError(std::string("cannot load checkpoint: ") + e.what());
  }
}

}  // namespace detail

inline int cmd_train(const RunConfig& rc, const Config& c) {
  TrainConfig tc = TrainConfig::from_config(c, rc.seed, rc.out_dir);
  const TrainResult r = train(tc);
  if (r.failed) {
    std::cerr << "training failed: " << r.failure_reason
              << " (last good checkpoint retained in " << rc.out_dir << ")\n";
    return 2;
  }
  std::cout << "trained " << r.episodes.size() << " episodes; checkpoint "
            << rc.out_dir + "/checkpoint_final.bin" << "\n";
  if (!r.curves.empty()) {
    const CurvePoint& last = r.curves.back();
    std::cout << "final window: reward " << last.reward_mean << ", failure " << last.failure_pct
              << "%\n";
  }
  return 0;
}

inline int cmd_eval(const RunConfig& rc, const Config& c) {
  const auto method_names = detail::split_csv(c.get_string("method"));
  if (method_names.empty()) throw ConfigError("method list is empty");

  EvalOptions base;
  base.sim = SimParams::from_config(c);
  base.mpc = MpcParams::from_config(c);
  base.setting =
      c.get_string("setting") == "homogeneous" ? EvalSetting::Homogeneous : EvalSetting::Mixed;
  base.n_agents = c.get_int("n_agents");
  base.n_runs = c.get_int("n_runs");
  base.base_seed = rc.seed;
  base.kind = detail::scenario_from_config(c);
  base.forced_behavior = detail::behavior_from_config(c);
  base.jobs = c.get_int("jobs");

  std::optional<PolicyParams> policy;
  std::vector<MethodSummary> summaries;
  std::map<std::string, std::vector<EpisodeResult>> per_method;

  std::ofstream episodes_out(rc.out_dir + "/episodes.csv");
  episodes_out << kEpisodeHeader << "\n";
  for (const auto& name : method_names) {
    EvalOptions opts = base;
    opts.method = method_from_string(name);
    if (opts.method == Method::GoMpc) {
      if (!policy) policy = detail::load_policy(c.get_string("checkpoint"));
      opts.policy = &*policy;
    }
    std::ofstream traj(rc.out_dir + "/traj_" + name + ".csv");
    opts.traj_out = &traj;
    auto results = run_eval(opts);
    emit_episodes(results, episodes_out, /*header=*/false);
    summaries.push_back(summarize(results));
    per_method[name] = std::move(results);
  }
  emit_table(summaries, rc.out_dir + "/results.csv");

  // Pairwise significance on the success-only metrics.
  std::ofstream utests(rc.out_dir + "/utests.csv");
  utests << "method_a,method_b,metric,u,p_value,exact\n";
  auto successes = [](const std::vector<EpisodeResult>& rs, auto pick) {
    std::vector<double> out;
    for (const auto& r : rs)
      if (r.outcome == Outcome::Success) out.push_back(pick(r));
    return out;
  };
  for (std::size_t i = 0; i < method_names.size(); ++i) {
    for (std::size_t j = i + 1; j < method_names.size(); ++j) {
      for (const char* metric : {"time", "distance"}) {
        auto pick = [&](const EpisodeResult& r) {
          return std::string(metric) == "time" ? r.time_s : r.distance;
        };
        const auto a = successes(per_method[method_names[i]], pick);
        const auto b = successes(per_method[method_names[j]], pick);
        utests << method_names[i] << ',' << method_names[j] << ',' << metric << ',';
        if (a.empty() || b.empty()) {
          utests << ",,\n";
          continue;
        }
        try {
          const MannWhitneyResult mw = mann_whitney_u(a, b);
          utests << format_double(mw.u_a) << ',' << format_double(mw.p_value) << ','
                 << (mw.exact ? "exact" : "normal") << '\n';
        } catch (const DegenerateSamples&) {
          utests << ",,degenerate\n";
        }
      }
    }
  }

  for (const auto& s : summaries)
    std::cout << s.method << ": failure " << s.failure_pct << "% (" << s.collision_pct << " / "
              << s.timeout_pct << "), time " << s.time_mean << " +- " << s.time_std << " s\n";
  return 0;
}

// Trains one policy per reward variant under identical seeds and curriculum,
// evaluates all on identical scenario seed lists, and writes per-seed rows
// plus an aggregated comparison table.
inline int cmd_ablate(const RunConfig& rc, const Config& c) {
  const int n_seeds = c.get_int("ablate_seeds");
  const auto counts = c.get_int_list("eval_agent_counts");
  const char* variants[] = {"sparse", "progress", "time"};

  std::ofstream per_seed(rc.out_dir + "/ablation_runs.csv");
  per_seed << "variant,seed_index,n_agents,failure_pct,collision_pct,timeout_pct,time_mean,dist_mean\n";

  std::map<std::string, std::map<int, std::vector<MethodSummary>>> cells;
  for (const char* variant : variants) {
    for (int k = 0; k < n_seeds; ++k) {
      Config ck = c;
      ck.set("reward_variant", variant);
      const std::string run_dir =
          rc.out_dir + "/train_" + variant + "_s" + std::to_string(k);
      TrainConfig tc = TrainConfig::from_config(ck, rc.seed + std::uint64_t(k), run_dir);
      const TrainResult r = train(tc);
      if (r.failed) {
        std::cerr << "ablation training failed (" << variant << ", seed " << k
                  << "): " << r.failure_reason << "\n";
        return 2;
      }
      for (int n : counts) {
        EvalOptions opts;
        opts.sim = SimParams::from_config(ck);
        opts.mpc = MpcParams::from_config(ck);
        opts.method = Method::GoMpc;
        opts.policy = &r.params;
        opts.setting = EvalSetting::Mixed;
        opts.n_agents = n;
        opts.n_runs = c.get_int("n_runs");
        // Identical evaluation seed lists across variants: the base depends
        // only on (master seed, seed index, agent count).
        opts.base_seed = rc.seed + 100000ULL * std::uint64_t(k + 1) + std::uint64_t(n);
        opts.jobs = c.get_int("jobs");
        const auto results = run_eval(opts);
        MethodSummary s = summarize(results);
        s.method = variant;
        cells[variant][n].push_back(s);
        per_seed << variant << ',' << k << ',' << n << ',' << format_double(s.failure_pct) << ','
                 << format_double(s.collision_pct) << ',' << format_double(s.timeout_pct) << ','
                 << format_double(s.time_mean) << ',' << format_double(s.dist_mean) << '\n';
      }
    }
  }

  // Aggregate: one row per variant and agent count, averaged over seeds.
  std::vector<MethodSummary> table;
  for (const char* variant : variants) {
    for (int n : counts) {
      const auto& rows = cells[variant][n];
      MethodSummary agg;
      agg.method = variant;
      agg.n_agents = n;
      for (const auto& s : rows) {
        agg.n_runs += s.n_runs;
        agg.successes += s.successes;
        agg.time_mean += s.time_mean / rows.size();
        agg.time_std += s.time_std / rows.size();
        agg.dist_mean += s.dist_mean / rows.size();
        agg.dist_std += s.dist_std / rows.size();
        agg.failure_pct += s.failure_pct / rows.size();
        agg.collision_pct += s.collision_pct / rows.size();
        agg.timeout_pct += s.timeout_pct / rows.size();
      }
      table.push_back(agg);
    }
  }
  emit_table(table, rc.out_dir + "/ablation.csv");
  std::cout << "ablation table: " << rc.out_dir + "/ablation.csv" << "\n";
  return 0;
}

inline int cmd_replay(const RunConfig& rc, const Config& c) {
  const auto episodes = read_trajectory_log(rc.log_path);
  const double tau = c.get_double("tau");

  std::ofstream metrics(rc.out_dir + "/replay_metrics.csv");
  metrics << "episode,steps,time_s,distance,min_clearance,event\n";
  std::ofstream paths(rc.out_dir + "/paths.csv");
  paths << "episode,agent,step,x,y\n";

  for (const auto& ep : episodes) {
    const auto ego_it = ep.agents.find(0);
    if (ego_it == ep.agents.end()) continue;
    const auto& ego_rows = ego_it->second;
    double distance = 0.0;
    for (std::size_t i = 1; i < ego_rows.size(); ++i)
      distance += std::hypot(ego_rows[i].x - ego_rows[i - 1].x, ego_rows[i].y - ego_rows[i - 1].y);

    double min_clearance = std::numeric_limits<double>::infinity();
    for (const auto& [agent, rows] : ep.agents) {
      if (agent == 0) continue;
      const std::size_t n = std::min(rows.size(), ego_rows.size());
      for (std::size_t i = 0; i < n; ++i)
        min_clearance = std::min(
            min_clearance, std::hypot(rows[i].x - ego_rows[i].x, rows[i].y - ego_rows[i].y));
    }

    const int steps = ego_rows.empty() ? 0 : ego_rows.back().step - ego_rows.front().step;
    metrics << ep.episode << ',' << steps << ',' << format_double(steps * tau) << ','
            << format_double(distance) << ','
            << (std::isfinite(min_clearance) ? format_double(min_clearance) : std::string("inf"))
            << ',' << ep.event << '\n';
    for (const auto& [agent, rows] : ep.agents)
      for (const auto& r : rows)
        paths << ep.episode << ',' << agent << ',' << r.step << ',' << format_double(r.x) << ','
              << format_double(r.y) << '\n';
  }
  std::cout << "replayed " << episodes.size() << " episodes\n";
  return 0;
}

inline int cli_main(int argc, const char* const* argv) {
  const RunConfig rc = parse_cli(argc, argv);
  if (rc.command == "help") return 0;
  const Config c = detail::load_effective_config(rc);
  detail::write_run_info(rc, c);
  if (rc.command == "train") return cmd_train(rc, c);
  if (rc.command == "eval") return cmd_eval(rc, c);
  if (rc.command == "ablate") return cmd_ablate(rc, c);
  if (rc.command == "replay") return cmd_replay(rc, c);
  throw UsageError("unknown command: " + rc.command);
}

}  // namespace navlab
