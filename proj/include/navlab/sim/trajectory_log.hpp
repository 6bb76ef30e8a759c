#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "navlab/sim/world.hpp"

namespace navlab {

struct LogParseError : std::runtime_error {
  LogParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string event_string(const EpisodeEvent& e) {
  switch (e.kind) {
    case EventKind::GoalReached: return "goal";
    case EventKind::Collision: return "collision:" + std::to_string(e.agent_index);
    case EventKind::Timeout: return "timeout";
  }
  return "?";
}

inline const char* kTrajectoryHeader = "episode,step,agent,x,y,psi,v,omega,event";

// Line-delimited trajectory records: one row per agent per step, the terminal
// event tagged on the ego row of its step. Agent 0 is the ego. The sink is an
// arbitrary stream so episodes can be buffered and stitched deterministically.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out, bool write_header = true) : out_(out) {
    if (write_header) out_ << kTrajectoryHeader << "\n";
  }

  void record(int episode, const World& w, const EpisodeEvent* event = nullptr) {
    write_row(episode, w.clock, 0, w.ego, event ? event_string(*event) : "");
    for (std::size_t i = 0; i < w.others.size(); ++i)
      write_row(episode, w.clock, static_cast<int>(i) + 1, w.others[i].state, "");
  }

 private:
  void write_row(int episode, int step, int agent, const AgentState& s, const std::string& ev) {
    out_ << episode << ',' << step << ',' << agent << ',' << format_double(s.position.x()) << ','
         << format_double(s.position.y()) << ',' << format_double(s.heading) << ','
         << format_double(s.forward_velocity) << ',' << format_double(s.angular_velocity) << ','
         << ev << '\n';
  }

  std::ostream& out_;
};

struct TrajectoryRow {
  int episode = 0;
  int step = 0;
  int agent = 0;
  double x = 0, y = 0, psi = 0, v = 0, omega = 0;
  std::string event;
};

struct EpisodeTrajectory {
  int episode = 0;
  // agent id -> rows in step order
  std::map<int, std::vector<TrajectoryRow>> agents;
  std::string event;  // terminal event string, empty if missing
};

inline std::vector<EpisodeTrajectory> read_trajectory_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LogParseError(path, 0, "cannot open file");
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw LogParseError(path, 1, "missing header");
  ++lineno;
  if (line.rfind("episode,step,agent", 0) != 0) throw LogParseError(path, 1, "bad header");

  std::map<int, EpisodeTrajectory> episodes;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (ss.eof() && !line.empty() && line.back() == ',') f.push_back("");
    if (f.size() != 9) throw LogParseError(path, lineno, "expected 9 fields");
    TrajectoryRow r;
    try {
      r.episode = std::stoi(f[0]);
      r.step = std::stoi(f[1]);
      r.agent = std::stoi(f[2]);
      r.x = std::stod(f[3]);
      r.y = std::stod(f[4]);
      r.psi = std::stod(f[5]);
      r.v = std::stod(f[6]);
      r.omega = std::stod(f[7]);
    } catch (const std::exception&) {
      throw LogParseError(path, lineno, "malformed numeric field");
    }
    r.event = f[8];
    auto& ep = episodes[r.episode];
    ep.episode = r.episode;
    auto& rows = ep.agents[r.agent];
    if (!rows.empty() && rows.back().step + 1 != r.step)
      throw LogParseError(path, lineno, "non-contiguous steps for agent " + std::to_string(r.agent));
    rows.push_back(r);
    if (!r.event.empty()) ep.event = r.event;
  }
  std::vector<EpisodeTrajectory> out;
  out.reserve(episodes.size());
  for (auto& [id, ep] : episodes) out.push_back(std::move(ep));
  return out;
}

}  // namespace navlab
