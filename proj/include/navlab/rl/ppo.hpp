#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "navlab/nn/adam.hpp"
#include "navlab/rl/rollout.hpp"

namespace navlab {

struct NonFiniteLoss : std::runtime_error {
  NonFiniteLoss() : std::runtime_error("non-finite loss; parameters restored") {}
};

struct PpoSettings {
  double clip = 0.1;
  double lr = 1e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double grad_clip = 0.5;
  int epochs = 4;
  int minibatch = 512;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  bool aborted = false;
};

// Clipped-surrogate PPO over a collected window. Advantages must already be
// computed and normalized. On a non-finite loss the update is abandoned and
// the incoming parameters restored.
inline PpoStats ppo_update(const std::vector<TransitionRecord>& buf, PolicyParams& params,
                           AdamState& adam, const PpoSettings& s, Rng& rng) {
  PpoStats stats;
  const PolicyParams snapshot = params;
  const std::size_t T = buf.size();
  if (T == 0) return stats;

  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);

  double sum_policy = 0, sum_value = 0, sum_entropy = 0, sum_kl = 0, sum_clipfrac = 0;
  long batches = 0;

  PolicyParams grads = PolicyParams::zeros(params.cfg);
  ForwardTape tape;
  for (int epoch = 0; epoch < s.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < T; start += std::size_t(s.minibatch)) {
      const std::size_t end = std::min(T, start + std::size_t(s.minibatch));
      const double B = double(end - start);
      grads.set_zero();
      double mb_policy = 0, mb_value = 0, mb_entropy = 0, mb_kl = 0, mb_clip = 0;

      for (std::size_t bi = start; bi < end; ++bi) {
        const TransitionRecord& t = buf[order[bi]];
        const ForwardOut out = forward(params, t.obs, t.hidden, &tape);
        const double logp_new = gaussian_log_prob(t.action, out.mu, out.sigma);
        const double ratio = std::exp(logp_new - t.log_prob);
        const double clipped = std::clamp(ratio, 1.0 - s.clip, 1.0 + s.clip);
        const double surr_un = ratio * t.advantage;
        const double surr_cl = clipped * t.advantage;

        mb_policy += -std::min(surr_un, surr_cl);
        const double verr = out.value - t.ret;
        mb_value += verr * verr;
        double ent = 0.0;
        for (int j = 0; j < 2; ++j) ent += std::log(out.sigma(j)) + 0.5 * (1.0 + std::log(2.0 * M_PI));
        mb_entropy += ent;
        mb_kl += t.log_prob - logp_new;
        if (std::abs(ratio - 1.0) > s.clip) mb_clip += 1.0;

        // dLoss/dlogp_new: active only through the unclipped branch.
        double dlogp = 0.0;
        if (surr_un <= surr_cl) dlogp = -t.advantage * ratio / B;
        Eigen::Vector2d d_mu, d_logstd;
        for (int j = 0; j < 2; ++j) {
          const double z = (t.action(j) - out.mu(j)) / out.sigma(j);
          d_mu(j) = dlogp * z / out.sigma(j);
          d_logstd(j) = dlogp * (z * z - 1.0) - s.entropy_coef / B;
        }
        const double d_value = s.value_coef * 2.0 * verr / B;
        backward(params, tape, d_mu, d_value, d_logstd, grads);
      }

      const double mb_loss = mb_policy / B + s.value_coef * mb_value / B - s.entropy_coef * mb_entropy / B;
      if (!std::isfinite(mb_loss) || !std::isfinite(grads.squared_norm())) {
        params = snapshot;
        stats.aborted = true;
        return stats;
      }
      adam.step(params, grads, s.lr, s.grad_clip);

      sum_policy += mb_policy / B;
      sum_value += mb_value / B;
      sum_entropy += mb_entropy / B;
      sum_kl += mb_kl / B;
      sum_clipfrac += mb_clip / B;
      ++batches;
    }
  }
  stats.policy_loss = sum_policy / double(batches);
  stats.value_loss = sum_value / double(batches);
  stats.entropy = sum_entropy / double(batches);
  stats.approx_kl = sum_kl / double(batches);
  stats.clip_fraction = sum_clipfrac / double(batches);
  return stats;
}

struct SupervisedStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  int used = 0;
};

// MPC-as-expert warm start: squared error of the policy mean against the
// expert displacement plus squared value error against the return target,
// iterated over the batch in minibatch chunks with one optimizer step each.
// Reported losses are those of the final epoch.
inline SupervisedStats supervised_update(const std::vector<const TransitionRecord*>& batch,
                                         PolicyParams& params, AdamState& adam, double lr,
                                         double grad_clip, int minibatch, int epochs = 1) {
  SupervisedStats stats;
  if (batch.empty()) return stats;
  PolicyParams grads = PolicyParams::zeros(params.cfg);
  ForwardTape tape;
  double sum_policy = 0, sum_value = 0;

  for (int epoch = 0; epoch < std::max(1, epochs); ++epoch) {
    sum_policy = 0;
    sum_value = 0;
    for (std::size_t start = 0; start < batch.size(); start += std::size_t(minibatch)) {
      const std::size_t end = std::min(batch.size(), start + std::size_t(minibatch));
      const double B = double(end - start);
      grads.set_zero();
      for (std::size_t bi = start; bi < end; ++bi) {
        const TransitionRecord& t = *batch[bi];
        const ForwardOut out = forward(params, t.obs, t.hidden, &tape);
        const Eigen::Vector2d err = out.mu - t.expert_action;
        const double verr = out.value - t.ret;
        sum_policy += err.squaredNorm();
        sum_value += verr * verr;
        backward(params, tape, 2.0 * err / B, 2.0 * verr / B, Eigen::Vector2d::Zero(), grads);
      }
      adam.step(params, grads, lr, grad_clip);
    }
  }
  stats.policy_loss = sum_policy / double(batch.size());
  stats.value_loss = sum_value / double(batch.size());
  stats.used = static_cast<int>(batch.size());
  return stats;
}

}  // namespace navlab
