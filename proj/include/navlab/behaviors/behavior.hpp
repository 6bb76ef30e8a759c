#pragma once

#include <vector>

#include "navlab/core/config.hpp"
#include "navlab/core/rng.hpp"

namespace navlab {

enum class BehaviorKind { Rvo, ConstVel, Sinusoid, Circular };

inline const char* behavior_name(BehaviorKind k) {
  switch (k) {
    case BehaviorKind::Rvo: return "rvo";
    case BehaviorKind::ConstVel: return "constvel";
    case BehaviorKind::Sinusoid: return "sinusoid";
    case BehaviorKind::Circular: return "circular";
  }
  return "?";
}

struct BehaviorTag {
  BehaviorKind kind = BehaviorKind::Rvo;
  double coop = 0.5;       // Rvo: cooperation coefficient in [0.1, 1]
  double freq = 1.0;       // Sinusoid: [0.1, 5] Hz
  double amplitude = 1.0;  // Sinusoid: lateral amplitude [m]
  double radius = 2.0;     // Circular: [1, 5] m
  double speed = 1.0;      // Circular: [0.5, 1.5] m/s
  int direction = 1;       // Circular: +1 CCW, -1 CW
};

struct BehaviorParams {
  double coop_fraction = 0.8;
  double coop_c_min = 0.1, coop_c_max = 1.0;
  double v_pref = 1.0;
  double sinusoid_freq_min = 0.1, sinusoid_freq_max = 5.0;
  double sinusoid_amp_min = 0.5, sinusoid_amp_max = 1.5;
  double circular_radius_min = 1.0, circular_radius_max = 5.0;
  double circular_speed_min = 0.5, circular_speed_max = 1.5;
  int rvo_candidates = 200;
  double rvo_horizon = 5.0;

  static BehaviorParams from_config(const Config& c) {
    BehaviorParams b;
    b.coop_fraction = c.get_double("coop_fraction");
    b.coop_c_min = c.get_double("coop_c_min");
    b.coop_c_max = c.get_double("coop_c_max");
    b.v_pref = c.get_double("v_pref");
    b.sinusoid_freq_min = c.get_double("sinusoid_freq_min");
    b.sinusoid_freq_max = c.get_double("sinusoid_freq_max");
    b.sinusoid_amp_min = c.get_double("sinusoid_amp_min");
    b.sinusoid_amp_max = c.get_double("sinusoid_amp_max");
    b.circular_radius_min = c.get_double("circular_radius_min");
    b.circular_radius_max = c.get_double("circular_radius_max");
    b.circular_speed_min = c.get_double("circular_speed_min");
    b.circular_speed_max = c.get_double("circular_speed_max");
    b.rvo_candidates = c.get_int("rvo_candidates");
    b.rvo_horizon = c.get_double("rvo_horizon");
    return b;
  }
};

inline BehaviorTag sample_noncooperative(Rng& rng, const BehaviorParams& p) {
  BehaviorTag t;
  switch (uniform_int(rng, 0, 2)) {
    case 0:
      t.kind = BehaviorKind::ConstVel;
      break;
    case 1:
      t.kind = BehaviorKind::Sinusoid;
      t.freq = uniform(rng, p.sinusoid_freq_min, p.sinusoid_freq_max);
      t.amplitude = uniform(rng, p.sinusoid_amp_min, p.sinusoid_amp_max);
      break;
    default:
      t.kind = BehaviorKind::Circular;
      t.radius = uniform(rng, p.circular_radius_min, p.circular_radius_max);
      t.speed = uniform(rng, p.circular_speed_min, p.circular_speed_max);
      t.direction = bernoulli(rng, 0.5) ? 1 : -1;
      break;
  }
  return t;
}

// Each agent is cooperative with probability coop_fraction; cooperative agents
// draw c ~ U(c_min, c_max), non-cooperative ones pick one of the three
// scripted policies with parameters inside their admissible ranges.
inline std::vector<BehaviorTag> assign_behaviors(int n, Rng& rng, const BehaviorParams& p) {
  std::vector<BehaviorTag> tags;
  tags.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (bernoulli(rng, p.coop_fraction)) {
      BehaviorTag t;
      t.kind = BehaviorKind::Rvo;
      t.coop = uniform(rng, p.coop_c_min, p.coop_c_max);
      tags.push_back(t);
    } else {
      tags.push_back(sample_noncooperative(rng, p));
    }
  }
  return tags;
}

}  // namespace navlab
