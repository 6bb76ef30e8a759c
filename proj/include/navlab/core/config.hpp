#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace navlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  const char* name;
  const char* section;  // module that consumes the key
  const char* def;
  const char* doc;
};

// Every tunable of the artifact. Flat key space; sections group keys by the
// module that consumes them when serializing and in --help output.
inline const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      // sim
      {"tau", "sim", "0.1", "integration / MPC stage time step [s]"},
      {"goal_tolerance", "sim", "0.2", "goal reached when within this distance [m]"},
      {"v_max", "sim", "1.5", "ego max forward speed [m/s]"},
      {"omega_max", "sim", "2.0", "ego max angular speed [rad/s]"},
      {"a_max", "sim", "2.0", "ego max linear acceleration [m/s^2]"},
      {"alpha_max", "sim", "4.0", "ego max angular acceleration [rad/s^2]"},
      {"agent_radius", "sim", "0.3", "body radius of every agent [m]"},
      {"arena_radius", "sim", "6.0", "spawn arena radius [m]"},
      {"spawn_margin", "sim", "0.5", "extra pairwise clearance required at spawn [m]"},
      {"goal_min_dist", "sim", "2.0", "minimum start-to-goal distance in Random scenarios [m]"},
      {"spawn_retries", "sim", "200", "rejection-sampling attempts before SpawnFailure"},
      {"timeout_factor", "sim", "3.0", "timeout = factor * straight-line time"},
      {"timeout_min_steps", "sim", "200", "lower bound on the episode step budget"},
      {"max_agents", "sim", "16", "maximum total agents a scenario may request"},
      // behaviors
      {"coop_fraction", "behaviors", "0.8", "probability a non-ego agent is cooperative (RVO)"},
      {"coop_c_min", "behaviors", "0.1", "cooperation coefficient lower bound"},
      {"coop_c_max", "behaviors", "1.0", "cooperation coefficient upper bound"},
      {"v_pref", "behaviors", "1.0", "preferred speed of non-ego agents [m/s]"},
      {"sinusoid_freq_min", "behaviors", "0.1", "sinusoid policy frequency lower bound [Hz]"},
      {"sinusoid_freq_max", "behaviors", "5.0", "sinusoid policy frequency upper bound [Hz]"},
      {"sinusoid_amp_min", "behaviors", "0.5", "sinusoid policy amplitude lower bound [m]"},
      {"sinusoid_amp_max", "behaviors", "1.5", "sinusoid policy amplitude upper bound [m]"},
      {"circular_radius_min", "behaviors", "1.0", "circular policy radius lower bound [m]"},
      {"circular_radius_max", "behaviors", "5.0", "circular policy radius upper bound [m]"},
      {"circular_speed_min", "behaviors", "0.5", "circular policy speed lower bound [m/s]"},
      {"circular_speed_max", "behaviors", "1.5", "circular policy speed upper bound [m/s]"},
      {"rvo_candidates", "behaviors", "200", "candidate velocities sampled per RVO query"},
      {"rvo_horizon", "behaviors", "5.0", "RVO time-to-collision horizon [s]"},
      // mpc
      {"mpc_stages", "mpc", "20", "number of stages N in the OCP"},
      {"mpc_closest", "mpc", "6", "collision constraints on the m closest agents"},
      {"mpc_q_terminal", "mpc", "100.0", "terminal cost weight Q_N"},
      {"mpc_q_control", "mpc", "0.1", "control cost weight (both diagonal entries of Q_u)"},
      {"mpc_constraint_tol", "mpc", "1e-3", "constraint satisfaction tolerance [m]"},
      {"mpc_eps_norm", "mpc", "1e-6", "degenerate-reference threshold for cost normalization [m]"},
      {"mpc_penalty_mu0", "mpc", "10.0", "initial penalty weight"},
      {"mpc_penalty_growth", "mpc", "5.0", "penalty weight multiplier per outer round"},
      {"mpc_outer_rounds", "mpc", "6", "penalty escalation rounds"},
      {"mpc_inner_iters", "mpc", "200", "max gradient-descent iterations per round"},
      {"mpc_kkt_tol", "mpc", "1e-4", "projected-gradient residual target"},
      {"mpc_budget_ms", "mpc", "0", "wall-clock budget per solve, 0 = unlimited (keeps runs deterministic)"},
      // nn
      {"nn_hidden", "nn", "64", "recurrent cell hidden size"},
      {"nn_trunk", "nn", "128", "width of the two shared dense layers"},
      {"nn_log_std_init", "nn", "-0.5", "initial policy log standard deviation"},
      {"nn_log_std_min", "nn", "-5.0", "log-std clamp lower bound"},
      {"nn_log_std_max", "nn", "2.0", "log-std clamp upper bound"},
      {"nn_obs_scale", "nn", "0.25", "fixed input gain applied to observation vectors"},
      // train
      {"gamma", "train", "0.99", "discount factor"},
      {"clip", "train", "0.1", "PPO clip factor"},
      {"rollout_window", "train", "2048", "transitions collected per update"},
      {"lr", "train", "1e-4", "learning rate"},
      {"gae_lambda", "train", "0.95", "GAE lambda"},
      {"r_goal", "train", "3.0", "terminal reward for reaching the goal"},
      {"r_collision", "train", "-10.0", "terminal reward for a collision"},
      {"reward_variant", "train", "time", "step reward variant: sparse | time | progress"},
      {"n_warmstart_episodes", "train", "200", "episodes of supervised MPC imitation before PPO"},
      {"warmstart_epochs", "train", "10", "supervised passes over each warm-start window"},
      {"warmstart_lr", "train", "1e-3", "learning rate during the supervised warm start"},
      {"n_episodes", "train", "2000", "total training episodes"},
      {"curriculum", "train", "0:2,600:4,1200:6", "episode:max_total_agents milestones"},
      {"ppo_epochs", "train", "4", "PPO epochs per update"},
      {"sgd_minibatch", "train", "512", "minibatch size for gradient steps"},
      {"value_coef", "train", "0.5", "value loss coefficient"},
      {"entropy_coef", "train", "0.01", "entropy bonus coefficient"},
      {"grad_clip", "train", "0.5", "global gradient-norm clip"},
      {"curve_window", "train", "100", "episodes per training-curve point"},
      {"checkpoint_every", "train", "500", "episodes between periodic checkpoints (0 = final only)"},
      // eval
      {"method", "eval", "gompc", "evaluated method: gompc | mpconly | rvoego"},
      {"setting", "eval", "mixed", "mixed | homogeneous"},
      {"n_agents", "eval", "6", "total agents per evaluated episode (ego included)"},
      {"n_runs", "eval", "200", "episodes per evaluation cell"},
      {"scenario_kind", "eval", "random_kind", "symmetric | asymmetric | pairwise | random | random_kind"},
      {"checkpoint", "eval", "", "policy checkpoint path (gompc)"},
      {"eval_agent_counts", "eval", "6,8,10", "agent counts for the ablation protocol"},
      {"ablate_seeds", "eval", "3", "training seeds per reward variant in run_ablate"},
      {"forced_behavior", "eval", "", "override all non-ego behaviors: constvel | sinusoid | circular | rvo"},
      // cli
      {"jobs", "cli", "1", "worker threads for independent episodes / runs"},
  };
  return keys;
}

class Config {
 public:
  static Config defaults() {
    Config c;
    for (const auto& k : config_registry()) c.values_[k.name] = k.def;
    return c;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Config c = defaults();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[' && s.back() == ']') continue;  // section headers are organizational
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
      c.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    return c;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
  }

  // "key=value" pairs, applied over file values.
  void apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
      auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("override must be key=value: " + o);
      set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
  }

  const std::string& get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
  }

  double get_double(const std::string& key) const {
    const std::string& s = get_string(key);
    try {
      size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not a number: '" + s + "'");
    }
  }

  int get_int(const std::string& key) const {
    const std::string& s = get_string(key);
    try {
      size_t pos = 0;
      long v = std::stol(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not an integer: '" + s + "'");
    }
  }

  std::vector<int> get_int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(std::stoi(item));
    }
    return out;
  }

  // Deterministic serialization: sections in registry order, keys in registry order.
  void save(std::ostream& out) const {
    std::string current;
    for (const auto& k : config_registry()) {
      if (current != k.section) {
        if (!current.empty()) out << "\n";
        out << "[" << k.section << "]\n";
        current = k.section;
      }
      out << k.name << " = " << values_.at(k.name) << "\n";
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    save(out);
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace navlab
