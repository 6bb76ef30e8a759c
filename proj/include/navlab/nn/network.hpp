#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "navlab/core/config.hpp"
#include "navlab/core/rng.hpp"

namespace navlab {

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct TapeMismatch : std::runtime_error {
  explicit TapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NetConfig {
  int neighbor_dim = 7;  // [p_i (2), v_i (2), r_i, d_i, r_i + r]
  int ego_dim = 6;       // [d_g, p - g (2), v_ref, psi, r]
  int hidden = 64;
  int trunk = 128;
  int action_dim = 2;
  double log_std_init = -0.5;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  // Fixed input gain. Observation entries are in meters over a ~12 m arena;
  // scaling keeps the tanh trunk out of saturation.
  double obs_scale = 0.25;

  bool operator==(const NetConfig&) const = default;

  static NetConfig from_config(const Config& c) {
    NetConfig n;
    n.hidden = c.get_int("nn_hidden");
    n.trunk = c.get_int("nn_trunk");
    n.log_std_init = c.get_double("nn_log_std_init");
    n.log_std_min = c.get_double("nn_log_std_min");
    n.log_std_max = c.get_double("nn_log_std_max");
    n.obs_scale = c.get_double("nn_obs_scale");
    return n;
  }
};

// Recurrent encoder over the neighbor sequence (single-layer LSTM), shared
// two-layer tanh trunk, Gaussian policy mean head, state-independent log-std,
// and a value head. Everything is a plain dense matrix so the training loop
// can walk parameters uniformly.
struct PolicyParams {
  NetConfig cfg;
  Eigen::MatrixXd Wx, Wh, b;      // LSTM: 4H x D, 4H x H, 4H x 1; gate order [i f g o]
  Eigen::MatrixXd W1, b1, W2, b2; // trunk
  Eigen::MatrixXd Wmu, bmu;       // policy mean head
  Eigen::MatrixXd Wv, bv;         // value head
  Eigen::MatrixXd log_std;        // A x 1

  template <class F>
  void for_each(F&& f) {
    f("Wx", Wx); f("Wh", Wh); f("b", b);
    f("W1", W1); f("b1", b1); f("W2", W2); f("b2", b2);
    f("Wmu", Wmu); f("bmu", bmu); f("Wv", Wv); f("bv", bv);
    f("log_std", log_std);
  }

  template <class F>
  void for_each(F&& f) const {
    const_cast<PolicyParams*>(this)->for_each(
        [&](const char* name, Eigen::MatrixXd& m) { f(name, const_cast<const Eigen::MatrixXd&>(m)); });
  }

  static PolicyParams zeros(const NetConfig& cfg) {
    PolicyParams p;
    p.cfg = cfg;
    const int H = cfg.hidden, D = cfg.neighbor_dim, E = cfg.ego_dim, T = cfg.trunk,
              A = cfg.action_dim;
    p.Wx = Eigen::MatrixXd::Zero(4 * H, D);
    p.Wh = Eigen::MatrixXd::Zero(4 * H, H);
    p.b = Eigen::MatrixXd::Zero(4 * H, 1);
    p.W1 = Eigen::MatrixXd::Zero(T, H + E);
    p.b1 = Eigen::MatrixXd::Zero(T, 1);
    p.W2 = Eigen::MatrixXd::Zero(T, T);
    p.b2 = Eigen::MatrixXd::Zero(T, 1);
    p.Wmu = Eigen::MatrixXd::Zero(A, T);
    p.bmu = Eigen::MatrixXd::Zero(A, 1);
    p.Wv = Eigen::MatrixXd::Zero(1, T);
    p.bv = Eigen::MatrixXd::Zero(1, 1);
    p.log_std = Eigen::MatrixXd::Zero(A, 1);
    return p;
  }

  static PolicyParams init(const NetConfig& cfg, Rng& rng) {
    PolicyParams p = zeros(cfg);
    auto fill = [&](Eigen::MatrixXd& m, double scale) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -scale, scale);
    };
    fill(p.Wx, 1.0 / std::sqrt(double(cfg.neighbor_dim)));
    fill(p.Wh, 1.0 / std::sqrt(double(cfg.hidden)));
    fill(p.W1, 1.0 / std::sqrt(double(cfg.hidden + cfg.ego_dim)));
    fill(p.W2, 1.0 / std::sqrt(double(cfg.trunk)));
    // Small head init keeps early actions near zero and the value surface flat.
    fill(p.Wmu, 0.01 / std::sqrt(double(cfg.trunk)));
    fill(p.Wv, 1.0 / std::sqrt(double(cfg.trunk)));
    p.b.block(cfg.hidden, 0, cfg.hidden, 1).setOnes();  // forget-gate bias
    p.log_std.setConstant(cfg.log_std_init);
    return p;
  }

  double squared_norm() const {
    double s = 0.0;
    for_each([&](const char*, const Eigen::MatrixXd& m) { s += m.squaredNorm(); });
    return s;
  }

  void scale(double a) {
    for_each([&](const char*, Eigen::MatrixXd& m) { m *= a; });
  }

  void set_zero() {
    for_each([&](const char*, Eigen::MatrixXd& m) { m.setZero(); });
  }

  void add_scaled(const PolicyParams& other, double a) {
    Wx += a * other.Wx; Wh += a * other.Wh; b += a * other.b;
    W1 += a * other.W1; b1 += a * other.b1; W2 += a * other.W2; b2 += a * other.b2;
    Wmu += a * other.Wmu; bmu += a * other.bmu; Wv += a * other.Wv; bv += a * other.bv;
    log_std += a * other.log_std;
  }
};

struct HiddenState {
  Eigen::VectorXd h, c;
  int step = 0;

  static HiddenState zero(const NetConfig& cfg) {
    HiddenState s;
    s.h = Eigen::VectorXd::Zero(cfg.hidden);
    s.c = Eigen::VectorXd::Zero(cfg.hidden);
    return s;
  }
};

struct Observation {
  Eigen::VectorXd ego;                    // ego_dim entries
  std::vector<Eigen::VectorXd> neighbors; // neighbor_dim entries each, farthest first
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LstmStepTape {
  Eigen::VectorXd x, h_prev, c_prev, i, f, g, o, c, tanh_c;
};

}  // namespace detail

struct ForwardTape {
  NetConfig cfg;
  Eigen::VectorXd ego;
  std::vector<detail::LstmStepTape> steps;
  Eigen::VectorXd u, a1, a2;  // trunk input and activations
  bool valid = false;
};

struct ForwardOut {
  Eigen::Vector2d mu;
  Eigen::Vector2d sigma;
  double value = 0.0;
  HiddenState next;
};

inline ForwardOut forward(const PolicyParams& p, const Observation& obs, const HiddenState& h0,
                          ForwardTape* tape = nullptr) {
  const NetConfig& cfg = p.cfg;
  const int H = cfg.hidden;
  if (obs.ego.size() != cfg.ego_dim)
    throw ShapeMismatch("ego observation has wrong dimension");
  if (h0.h.size() != H || h0.c.size() != H)
    throw ShapeMismatch("hidden state does not match the network size");

  Eigen::VectorXd h = h0.h, c = h0.c;
  const Eigen::VectorXd ego_scaled = cfg.obs_scale * obs.ego;
  if (tape) {
    tape->cfg = cfg;
    tape->ego = ego_scaled;
    tape->steps.clear();
    tape->steps.reserve(obs.neighbors.size());
  }
  for (const auto& raw : obs.neighbors) {
    if (raw.size() != cfg.neighbor_dim)
      throw ShapeMismatch("neighbor observation has wrong dimension");
    const Eigen::VectorXd x = cfg.obs_scale * raw;
    Eigen::VectorXd a = p.Wx * x + p.Wh * h + p.b.col(0);
    Eigen::VectorXd i(H), f(H), g(H), o(H);
    for (int j = 0; j < H; ++j) {
      i(j) = detail::sigmoid(a(j));
      f(j) = detail::sigmoid(a(H + j));
      g(j) = std::tanh(a(2 * H + j));
      o(j) = detail::sigmoid(a(3 * H + j));
    }
    Eigen::VectorXd c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
    Eigen::VectorXd tanh_c = c_new.array().tanh();
    Eigen::VectorXd h_new = o.cwiseProduct(tanh_c);
    if (tape) tape->steps.push_back({x, h, c, i, f, g, o, c_new, tanh_c});
    h = std::move(h_new);
    c = std::move(c_new);
  }

  Eigen::VectorXd u(H + cfg.ego_dim);
  u << h, ego_scaled;
  Eigen::VectorXd a1 = (p.W1 * u + p.b1.col(0)).array().tanh();
  Eigen::VectorXd a2 = (p.W2 * a1 + p.b2.col(0)).array().tanh();

  ForwardOut out;
  out.mu = p.Wmu * a2 + p.bmu.col(0);
  out.value = (p.Wv * a2 + p.bv.col(0))(0);
  for (int j = 0; j < cfg.action_dim; ++j) {
    const double ls = std::clamp(p.log_std(j, 0), cfg.log_std_min, cfg.log_std_max);
    out.sigma(j) = std::exp(ls);
  }
  out.next.h = h;
  out.next.c = c;
  out.next.step = h0.step + 1;
  if (tape) {
    tape->u = u;
    tape->a1 = a1;
    tape->a2 = a2;
    tape->valid = true;
  }
  return out;
}

// Reverse pass for a scalar loss with the given output gradients. d_log_std is
// the gradient w.r.t. the clamped log standard deviation; the clamp gate zeroes
// it outside the active range. Parameter gradients accumulate into `grads`.
inline void backward(const PolicyParams& p, const ForwardTape& tape, const Eigen::Vector2d& d_mu,
                     double d_value, const Eigen::Vector2d& d_log_std, PolicyParams& grads) {
  if (!tape.valid) throw TapeMismatch("tape was not produced by a forward call");
  if (!(tape.cfg == p.cfg)) throw TapeMismatch("tape does not match these parameters");
  const NetConfig& cfg = p.cfg;
  const int H = cfg.hidden;

  grads.Wmu += d_mu * tape.a2.transpose();
  grads.bmu.col(0) += d_mu;
  grads.Wv += d_value * tape.a2.transpose();
  grads.bv(0, 0) += d_value;

  Eigen::VectorXd d_a2 = p.Wmu.transpose() * d_mu + p.Wv.transpose() * Eigen::VectorXd::Constant(1, d_value);
  Eigen::VectorXd d_z2 = d_a2.cwiseProduct((1.0 - tape.a2.array().square()).matrix());
  grads.W2 += d_z2 * tape.a1.transpose();
  grads.b2.col(0) += d_z2;

  Eigen::VectorXd d_a1 = p.W2.transpose() * d_z2;
  Eigen::VectorXd d_z1 = d_a1.cwiseProduct((1.0 - tape.a1.array().square()).matrix());
  grads.W1 += d_z1 * tape.u.transpose();
  grads.b1.col(0) += d_z1;

  Eigen::VectorXd d_u = p.W1.transpose() * d_z1;
  Eigen::VectorXd d_h = d_u.head(H);
  Eigen::VectorXd d_c = Eigen::VectorXd::Zero(H);

  for (auto it = tape.steps.rbegin(); it != tape.steps.rend(); ++it) {
    const auto& s = *it;
    Eigen::VectorXd d_o = d_h.cwiseProduct(s.tanh_c);
    d_c += d_h.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
    Eigen::VectorXd d_f = d_c.cwiseProduct(s.c_prev);
    Eigen::VectorXd d_i = d_c.cwiseProduct(s.g);
    Eigen::VectorXd d_g = d_c.cwiseProduct(s.i);
    Eigen::VectorXd d_c_prev = d_c.cwiseProduct(s.f);

    Eigen::VectorXd d_a(4 * H);
    d_a.segment(0, H) = d_i.cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
    d_a.segment(H, H) = d_f.cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
    d_a.segment(2 * H, H) = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());
    d_a.segment(3 * H, H) = d_o.cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));

    grads.Wx += d_a * s.x.transpose();
    grads.Wh += d_a * s.h_prev.transpose();
    grads.b.col(0) += d_a;

    d_h = p.Wh.transpose() * d_a;
    d_c = d_c_prev;
  }

  for (int j = 0; j < cfg.action_dim; ++j) {
    const double ls = p.log_std(j, 0);
    if (ls > cfg.log_std_min && ls < cfg.log_std_max) grads.log_std(j, 0) += d_log_std(j);
  }
}

inline Eigen::Vector2d project_action(const Eigen::Vector2d& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Eigen::Vector2d(v * (max_norm / n)) : v;
}

inline double gaussian_log_prob(const Eigen::Vector2d& a, const Eigen::Vector2d& mu,
                                const Eigen::Vector2d& sigma) {
  double lp = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double z = (a(j) - mu(j)) / sigma(j);
    lp += -0.5 * z * z - std::log(sigma(j)) - 0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

struct ActionSample {
  Eigen::Vector2d raw;        // what the Gaussian produced; log_prob refers to this
  Eigen::Vector2d projected;  // clipped to the reachable ball, applied to the MPC
  double log_prob = 0.0;
};

// Draws delta ~ N(mu, diag sigma^2) and projects onto |delta| <= max_norm.
// The log-probability is that of the pre-projection sample.
inline ActionSample sample_action(const Eigen::Vector2d& mu, const Eigen::Vector2d& sigma,
                                  double max_norm, Rng& rng) {
  ActionSample s;
  for (int j = 0; j < 2; ++j) s.raw(j) = mu(j) + sigma(j) * normal(rng);
  s.projected = project_action(s.raw, max_norm);
  s.log_prob = gaussian_log_prob(s.raw, mu, sigma);
  return s;
}

}  // namespace navlab
