#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace navlab {

struct DegenerateSamples : std::runtime_error {
  DegenerateSamples() : std::runtime_error("all values identical across both samples") {}
};

struct MannWhitneyResult {
  double u_a = 0.0;
  double u_b = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

namespace detail {

// U statistic of `a` against `b` by pairwise comparison (ties count half).
inline double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) {
      if (x > y)
        u += 1.0;
      else if (x == y)
        u += 0.5;
    }
  return u;
}

}  // namespace detail

// Rank-sum U with midrank tie handling. Exact null enumeration when both
// samples have at most 8 values, normal approximation with tie correction and
// continuity correction otherwise. Two-sided p-value.
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;

  bool all_same = true;
  for (double x : a)
    if (x != a[0]) all_same = false;
  for (double y : b)
    if (y != a[0]) all_same = false;
  if (all_same) throw DegenerateSamples();

  MannWhitneyResult res;
  res.u_a = detail::pairwise_u(a, b);
  res.u_b = double(na) * double(nb) - res.u_a;

  if (na <= 8 && nb <= 8) {
    // Exhaustive enumeration of all C(n, na) group assignments of the pooled
    // values.
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> comb(na);
    for (std::size_t i = 0; i < na; ++i) comb[i] = i;
    long total = 0, le = 0, ge = 0;
    const double eps = 1e-9;
    while (true) {
      std::vector<double> ga, gb;
      ga.reserve(na);
      gb.reserve(nb);
      std::size_t ci = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (ci < na && comb[ci] == i) {
          ga.push_back(pooled[i]);
          ++ci;
        } else {
          gb.push_back(pooled[i]);
        }
      }
      const double u = detail::pairwise_u(ga, gb);
      ++total;
      if (u <= res.u_a + eps) ++le;
      if (u >= res.u_a - eps) ++ge;
      // next combination
      std::size_t k = na;
      while (k > 0 && comb[k - 1] == n - na + k - 1) --k;
      if (k == 0) break;
      ++comb[k - 1];
      for (std::size_t j = k; j < na; ++j) comb[j] = comb[j - 1] + 1;
    }
    const double p_le = double(le) / double(total);
    const double p_ge = double(ge) / double(total);
    res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    res.exact = true;
    return res;
  }

  // Normal approximation with tie correction.
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j] == pooled[i]) ++j;
    const double t = double(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }
  const double mu = double(na) * double(nb) / 2.0;
  const double var = (double(na) * double(nb) / 12.0) *
                     (double(n) + 1.0 - tie_sum / (double(n) * (double(n) - 1.0)));
  if (var <= 0.0) throw DegenerateSamples();
  double z = std::abs(res.u_a - mu) - 0.5;  // continuity correction
  if (z < 0.0) z = 0.0;
  z /= std::sqrt(var);
  res.p_value = std::erfc(z / std::sqrt(2.0));
  res.exact = false;
  return res;
}

}  // namespace navlab
