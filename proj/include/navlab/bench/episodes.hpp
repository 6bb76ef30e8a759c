#pragma once

#include <fstream>

#include "navlab/bench/tables.hpp"

namespace navlab {

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

inline const char* kEpisodeHeader =
    "method,scenario,n_agents,seed,outcome,time_s,distance,min_clearance,steps";

inline void emit_episodes(const std::vector<EpisodeResult>& results, std::ostream& out,
                          bool header = true) {
  if (header) out << kEpisodeHeader << "\n";
  for (const auto& r : results) {
    out << r.method << ',' << scenario_name(r.kind) << ',' << r.n_agents << ',' << r.seed << ','
        << outcome_name(r.outcome) << ',' << format_double(r.time_s) << ','
        << format_double(r.distance) << ','
        << (std::isfinite(r.min_clearance) ? format_double(r.min_clearance) : std::string("inf"))
        << ',' << r.steps << '\n';
  }
}

inline void emit_episodes(const std::vector<EpisodeResult>& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write episode results: " + path);
  emit_episodes(results, out);
}

}  // namespace navlab
