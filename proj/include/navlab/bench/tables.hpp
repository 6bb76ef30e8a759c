#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "navlab/bench/eval.hpp"

namespace navlab {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline const char* kTableHeader =
    "method,n_agents,time_mean,time_std,failure_pct,collision_pct,timeout_pct,dist_mean,dist_std";

inline void emit_table(const std::vector<MethodSummary>& summaries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write table: " + path);
  out << kTableHeader << "\n";
  for (const auto& s : summaries)
    out << s.method << ',' << s.n_agents << ',' << format_double(s.time_mean) << ','
        << format_double(s.time_std) << ',' << format_double(s.failure_pct) << ','
        << format_double(s.collision_pct) << ',' << format_double(s.timeout_pct) << ','
        << format_double(s.dist_mean) << ',' << format_double(s.dist_std) << '\n';
  if (!out) throw IoError("short write on table: " + path);
}

inline std::vector<MethodSummary> parse_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read table: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTableHeader) throw IoError("bad table header in " + path);
  std::vector<MethodSummary> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string item;
    std::vector<std::string> f;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 9) throw IoError("bad table row in " + path + ": " + line);
    MethodSummary s;
    s.method = f[0];
    s.n_agents = std::stoi(f[1]);
    s.time_mean = std::stod(f[2]);
    s.time_std = std::stod(f[3]);
    s.failure_pct = std::stod(f[4]);
    s.collision_pct = std::stod(f[5]);
    s.timeout_pct = std::stod(f[6]);
    s.dist_mean = std::stod(f[7]);
    s.dist_std = std::stod(f[8]);
    out.push_back(std::move(s));
  }
  return out;
}

struct PlotSeries {
  std::string name;
  std::vector<double> values;
};

// (x, series...) columns for downstream plotting.
inline void emit_plotdata(const std::string& x_name, const std::vector<double>& xs,
                          const std::vector<PlotSeries>& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write plot data: " + path);
  out << x_name;
  for (const auto& s : series) out << ',' << s.name;
  out << '\n';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << format_double(xs[i]);
    for (const auto& s : series)
      out << ',' << (i < s.values.size() ? format_double(s.values[i]) : std::string());
    out << '\n';
  }
  if (!out) throw IoError("short write on plot data: " + path);
}

}  // namespace navlab
