#pragma once

#include <cmath>

#include "navlab/nn/network.hpp"

namespace navlab {

// Adam with global gradient-norm clipping applied before the moment update.
class AdamState {
 public:
  explicit AdamState(const NetConfig& cfg)
      : m_(PolicyParams::zeros(cfg)), v_(PolicyParams::zeros(cfg)) {}

  void step(PolicyParams& params, PolicyParams& grads, double lr, double grad_clip) {
    if (grad_clip > 0.0) {
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > grad_clip) grads.scale(grad_clip / norm);
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));

    auto update = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& g, Eigen::MatrixXd& m,
                      Eigen::MatrixXd& v) {
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v.array().matrix() + (1.0 - beta2_) * g.cwiseProduct(g);
      p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
    };
    update(params.Wx, grads.Wx, m_.Wx, v_.Wx);
    update(params.Wh, grads.Wh, m_.Wh, v_.Wh);
    update(params.b, grads.b, m_.b, v_.b);
    update(params.W1, grads.W1, m_.W1, v_.W1);
    update(params.b1, grads.b1, m_.b1, v_.b1);
    update(params.W2, grads.W2, m_.W2, v_.W2);
    update(params.b2, grads.b2, m_.b2, v_.b2);
    update(params.Wmu, grads.Wmu, m_.Wmu, v_.Wmu);
    update(params.bmu, grads.bmu, m_.bmu, v_.bmu);
    update(params.Wv, grads.Wv, m_.Wv, v_.Wv);
    update(params.bv, grads.bv, m_.bv, v_.bv);
    update(params.log_std, grads.log_std, m_.log_std, v_.log_std);
  }

 private:
  PolicyParams m_, v_;
  long t_ = 0;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

}  // namespace navlab
