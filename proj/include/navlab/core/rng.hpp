#pragma once

#include <cstdint>
#include <random>

namespace navlab {

using Rng = std::mt19937_64;

namespace detail {

// splitmix64 scrambler; decorrelates sequential stream ids.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline Rng make_rng(std::uint64_t seed) { return Rng(detail::splitmix64(seed)); }

// Independent child stream keyed by (base, stream). Used to give every
// episode / environment its own reproducible sequence.
inline Rng fork_rng(std::uint64_t base, std::uint64_t stream) {
  return Rng(detail::splitmix64(detail::splitmix64(base) ^ (stream * 0xd1342543de82ef95ULL + 1)));
}

inline double uniform(Rng& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double normal(Rng& g, double mean = 0.0, double sd = 1.0) {
  return std::normal_distribution<double>(mean, sd)(g);
}

// Inclusive bounds.
inline int uniform_int(Rng& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

inline bool bernoulli(Rng& g, double p) { return std::bernoulli_distribution(p)(g); }

}  // namespace navlab
