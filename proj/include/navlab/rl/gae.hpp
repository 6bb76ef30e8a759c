#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace navlab {

struct LengthMismatch : std::runtime_error {
  explicit LengthMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1},
// delta_t = r_t + gamma * (1 - done_t) * V_{t+1} - V_t.
// `values` carries one extra entry: the bootstrap value of the state after
// the last transition (zero if that state is terminal).
inline GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
                     const std::vector<std::uint8_t>& dones, double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1) throw LengthMismatch("values must have rewards.size() + 1 entries");
  if (dones.size() != T) throw LengthMismatch("dones must match rewards");

  GaeResult out;
  out.advantages.resize(T);
  out.returns.resize(T);
  double running = 0.0;
  for (std::size_t i = T; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * not_done * values[i + 1] - values[i];
    running = delta + gamma * lambda * not_done * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

}  // namespace navlab
