#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "navlab/nn/network.hpp"

namespace navlab {

struct CorruptCheckpoint : std::runtime_error {
  explicit CorruptCheckpoint(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kCheckpointVersion = 1;

// Text header (format version, net config, shape list) followed by the raw
// little-endian double block in declaration order. Round trips are bit-exact.
inline void save_params(const PolicyParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << "navlab-checkpoint " << kCheckpointVersion << "\n";
  out << "config " << p.cfg.neighbor_dim << " " << p.cfg.ego_dim << " " << p.cfg.hidden << " "
      << p.cfg.trunk << " " << p.cfg.action_dim << " " << p.cfg.log_std_init << " "
      << p.cfg.log_std_min << " " << p.cfg.log_std_max << " " << p.cfg.obs_scale << "\n";
  p.for_each([&](const char* name, const Eigen::MatrixXd& m) {
    out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
  });
  out << "data\n";
  p.for_each([&](const char*, const Eigen::MatrixXd& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  });
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

inline PolicyParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line)) throw CorruptCheckpoint("empty checkpoint file");
  {
    std::istringstream ss(line);
    std::string magic;
    int version = -1;
    ss >> magic >> version;
    if (magic != "navlab-checkpoint") throw CorruptCheckpoint("bad magic line");
    if (version != kCheckpointVersion)
      throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(version) +
                              ", expected " + std::to_string(kCheckpointVersion));
  }
  NetConfig cfg;
  if (!std::getline(in, line)) throw CorruptCheckpoint("missing config line");
  {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag >> cfg.neighbor_dim >> cfg.ego_dim >> cfg.hidden >> cfg.trunk >> cfg.action_dim >>
        cfg.log_std_init >> cfg.log_std_min >> cfg.log_std_max >> cfg.obs_scale;
    if (tag != "config" || ss.fail()) throw CorruptCheckpoint("malformed config line");
  }

  PolicyParams p = PolicyParams::zeros(cfg);
  std::vector<std::pair<std::string, std::pair<long, long>>> declared;
  while (std::getline(in, line)) {
    if (line == "data") break;
    std::istringstream ss(line);
    std::string tag, name;
    long rows = 0, cols = 0;
    ss >> tag >> name >> rows >> cols;
    if (tag != "tensor" || ss.fail()) throw CorruptCheckpoint("malformed tensor line: " + line);
    declared.push_back({name, {rows, cols}});
  }
  if (line != "data") throw CorruptCheckpoint("missing data section");

  std::size_t idx = 0;
  bool shape_ok = true;
  p.for_each([&](const char* name, Eigen::MatrixXd& m) {
    if (idx >= declared.size() || declared[idx].first != name ||
        declared[idx].second.first != m.rows() || declared[idx].second.second != m.cols())
      shape_ok = false;
    ++idx;
  });
  if (!shape_ok || idx != declared.size())
    throw CorruptCheckpoint("tensor shapes do not match the network layout");

  bool read_ok = true;
  p.for_each([&](const char*, Eigen::MatrixXd& m) {
    if (!read_ok) return;
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * m.size())) read_ok = false;
  });
  if (!read_ok) throw CorruptCheckpoint("truncated data block");
  return p;
}

}  // namespace navlab
