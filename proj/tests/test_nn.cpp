#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>

#include "navlab/nn/adam.hpp"
#include "navlab/nn/checkpoint.hpp"
#include "navlab/nn/network.hpp"

using namespace navlab;

namespace {

Observation random_obs(const NetConfig& cfg, int n_neighbors, Rng& rng) {
  Observation obs;
  obs.ego.resize(cfg.ego_dim);
  for (int i = 0; i < cfg.ego_dim; ++i) obs.ego(i) = uniform(rng, -2, 2);
  for (int n = 0; n < n_neighbors; ++n) {
    Eigen::VectorXd row(cfg.neighbor_dim);
    for (int i = 0; i < cfg.neighbor_dim; ++i) row(i) = uniform(rng, -2, 2);
    obs.neighbors.push_back(std::move(row));
  }
  return obs;
}

PolicyParams random_direction(const NetConfig& cfg, Rng& rng) {
  PolicyParams d = PolicyParams::zeros(cfg);
  d.for_each([&](const char*, Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  });
  return d;
}

// Scalar probe loss: random linear combination of every head.
struct Probe {
  Eigen::Vector2d w_mu, w_logstd;
  double w_v;
  double eval(const PolicyParams& p, const Observation& obs, const HiddenState& h) const {
    const ForwardOut out = forward(p, obs, h);
    double loss = w_mu.dot(out.mu) + w_v * out.value;
    for (int j = 0; j < 2; ++j) loss += w_logstd(j) * std::log(out.sigma(j));
    return loss;
  }
};

}  // namespace

TEST_CASE("all-zero weights: mu = 0, V = 0, sigma = exp(log-std bias)") {
  NetConfig cfg;
  cfg.hidden = 16;
  cfg.trunk = 24;
  const PolicyParams p = PolicyParams::zeros(cfg);
  Rng rng = make_rng(1);
  const Observation obs = random_obs(cfg, 3, rng);
  const ForwardOut out = forward(p, obs, HiddenState::zero(cfg));
  CHECK(out.mu.norm() == 0.0);
  CHECK(out.value == 0.0);
  CHECK(out.sigma(0) == Catch::Approx(1.0));
  CHECK(out.sigma(1) == Catch::Approx(1.0));
}

TEST_CASE("empty neighbor sequence leaves the hidden state untouched") {
  NetConfig cfg;
  cfg.hidden = 16;
  cfg.trunk = 24;
  Rng rng = make_rng(2);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  HiddenState h = HiddenState::zero(cfg);
  h.h.setConstant(0.25);
  h.c.setConstant(-0.5);
  const Observation obs = random_obs(cfg, 0, rng);
  const ForwardOut out = forward(p, obs, h);
  CHECK(out.next.h == h.h);
  CHECK(out.next.c == h.c);
  CHECK(std::isfinite(out.value));
}

TEST_CASE("neighbor order changes the encoding") {
  NetConfig cfg;
  Rng rng = make_rng(3);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  Observation obs = random_obs(cfg, 2, rng);
  const ForwardOut a = forward(p, obs, HiddenState::zero(cfg));
  std::swap(obs.neighbors[0], obs.neighbors[1]);
  const ForwardOut b = forward(p, obs, HiddenState::zero(cfg));
  CHECK((a.mu - b.mu).norm() > 1e-12);
}

TEST_CASE("gradients match directional finite differences on every head") {
  NetConfig cfg;
  cfg.hidden = 12;
  cfg.trunk = 16;
  Rng rng = make_rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const PolicyParams p = PolicyParams::init(cfg, rng);
    const int n_neighbors = trial % 3 == 0 ? 0 : (trial % 3 == 1 ? 1 : 5);
    const Observation obs = random_obs(cfg, n_neighbors, rng);
    HiddenState h = HiddenState::zero(cfg);
    for (int i = 0; i < cfg.hidden; ++i) {
      h.h(i) = uniform(rng, -0.5, 0.5);
      h.c(i) = uniform(rng, -0.5, 0.5);
    }
    Probe probe{{normal(rng), normal(rng)}, {normal(rng), normal(rng)}, normal(rng)};

    ForwardTape tape;
    const ForwardOut out = forward(p, obs, h, &tape);
    PolicyParams grads = PolicyParams::zeros(cfg);
    backward(p, tape, probe.w_mu, probe.w_v, probe.w_logstd, grads);
    (void)out;

    for (int probe_dir = 0; probe_dir < 3; ++probe_dir) {
      const PolicyParams dir = random_direction(cfg, rng);
      double analytic = 0.0;
      analytic += (grads.Wx.cwiseProduct(dir.Wx)).sum();
      analytic += (grads.Wh.cwiseProduct(dir.Wh)).sum();
      analytic += (grads.b.cwiseProduct(dir.b)).sum();
      analytic += (grads.W1.cwiseProduct(dir.W1)).sum();
      analytic += (grads.b1.cwiseProduct(dir.b1)).sum();
      analytic += (grads.W2.cwiseProduct(dir.W2)).sum();
      analytic += (grads.b2.cwiseProduct(dir.b2)).sum();
      analytic += (grads.Wmu.cwiseProduct(dir.Wmu)).sum();
      analytic += (grads.bmu.cwiseProduct(dir.bmu)).sum();
      analytic += (grads.Wv.cwiseProduct(dir.Wv)).sum();
      analytic += (grads.bv.cwiseProduct(dir.bv)).sum();
      analytic += (grads.log_std.cwiseProduct(dir.log_std)).sum();

      const double h_fd = 1e-6;
      PolicyParams pp = p, pm = p;
      pp.add_scaled(dir, h_fd);
      pm.add_scaled(dir, -h_fd);
      const double fd = (probe.eval(pp, obs, h) - probe.eval(pm, obs, h)) / (2 * h_fd);
      const double rel = std::abs(analytic - fd) / std::max(1e-6, std::abs(analytic));
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss touching only the value head leaves the policy head untouched") {
  NetConfig cfg;
  cfg.hidden = 12;
  cfg.trunk = 16;
  Rng rng = make_rng(5);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  const Observation obs = random_obs(cfg, 2, rng);
  ForwardTape tape;
  forward(p, obs, HiddenState::zero(cfg), &tape);
  PolicyParams grads = PolicyParams::zeros(cfg);
  backward(p, tape, Eigen::Vector2d::Zero(), 1.0, Eigen::Vector2d::Zero(), grads);
  CHECK(grads.Wmu.norm() == 0.0);
  CHECK(grads.bmu.norm() == 0.0);
  CHECK(grads.log_std.norm() == 0.0);
  CHECK(grads.Wv.norm() > 0.0);
  CHECK(grads.W1.norm() > 0.0);  // shared trunk carries value gradient
}

TEST_CASE("doubling the output gradient doubles every parameter gradient") {
  NetConfig cfg;
  cfg.hidden = 12;
  cfg.trunk = 16;
  Rng rng = make_rng(6);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  const Observation obs = random_obs(cfg, 3, rng);
  ForwardTape tape;
  forward(p, obs, HiddenState::zero(cfg), &tape);
  PolicyParams g1 = PolicyParams::zeros(cfg), g2 = PolicyParams::zeros(cfg);
  const Eigen::Vector2d dmu{0.3, -0.7}, dls{0.1, 0.2};
  backward(p, tape, dmu, 0.5, dls, g1);
  backward(p, tape, 2 * dmu, 1.0, 2 * dls, g2);
  g2.add_scaled(g1, -2.0);
  CHECK(std::sqrt(g2.squared_norm()) < 1e-12);
}

TEST_CASE("store-state: carried hidden states replay the concatenated history") {
  NetConfig cfg;
  Rng rng = make_rng(7);
  const PolicyParams p = PolicyParams::init(cfg, rng);

  HiddenState h = HiddenState::zero(cfg);
  Observation concat;
  ForwardOut stepped;
  for (int t = 0; t < 12; ++t) {
    const Observation obs = random_obs(cfg, t % 4, rng);
    stepped = forward(p, obs, h);
    h = stepped.next;
    for (const auto& nb : obs.neighbors) concat.neighbors.push_back(nb);
    concat.ego = obs.ego;  // trunk sees the latest ego vector
  }
  const ForwardOut replayed = forward(p, concat, HiddenState::zero(cfg));
  CHECK((replayed.next.h - h.h).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((replayed.next.c - h.c).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((replayed.mu - stepped.mu).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(std::abs(replayed.value - stepped.value) < 1e-10);
}

TEST_CASE("log-std clamping bounds sigma") {
  NetConfig cfg;
  PolicyParams p = PolicyParams::zeros(cfg);
  p.log_std(0, 0) = -10.0;
  p.log_std(1, 0) = 10.0;
  Rng rng = make_rng(8);
  const Observation obs = random_obs(cfg, 1, rng);
  const ForwardOut out = forward(p, obs, HiddenState::zero(cfg));
  CHECK(out.sigma(0) == Catch::Approx(std::exp(-5.0)));
  CHECK(out.sigma(1) == Catch::Approx(std::exp(2.0)));
}

TEST_CASE("shape mismatches are rejected") {
  NetConfig cfg;
  Rng rng = make_rng(9);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  Observation obs = random_obs(cfg, 1, rng);
  obs.ego.resize(3);
  CHECK_THROWS_AS(forward(p, obs, HiddenState::zero(cfg)), ShapeMismatch);

  NetConfig other = cfg;
  other.hidden = 8;
  Rng rng2 = make_rng(10);
  const PolicyParams q = PolicyParams::init(other, rng2);
  ForwardTape tape;
  forward(q, random_obs(other, 1, rng2), HiddenState::zero(other), &tape);
  PolicyParams grads = PolicyParams::zeros(cfg);
  CHECK_THROWS_AS(backward(p, tape, Eigen::Vector2d::Zero(), 0.0, Eigen::Vector2d::Zero(), grads),
                  TapeMismatch);
}

TEST_CASE("sample_action") {
  Rng rng = make_rng(11);
  SECTION("tiny sigma collapses to the projected mean") {
    const Eigen::Vector2d mu{5.0, 0.0};
    const Eigen::Vector2d sigma{1e-6, 1e-6};
    const ActionSample s = sample_action(mu, sigma, 3.0, rng);
    CHECK((s.projected - Eigen::Vector2d{3.0, 0.0}).norm() < 1e-4);
  }
  SECTION("samples are unbiased") {
    const Eigen::Vector2d mu{0.0, 0.0}, sigma{1.0, 1.0};
    Eigen::Vector2d mean{0.0, 0.0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += sample_action(mu, sigma, 100.0, rng).raw;
    mean /= double(n);
    const double bound = 3.0 / std::sqrt(double(n));
    CHECK(std::abs(mean(0)) < bound);
    CHECK(std::abs(mean(1)) < bound);
  }
  SECTION("projection bound holds for every sample") {
    const Eigen::Vector2d mu{4.0, 4.0}, sigma{2.0, 2.0};
    for (int i = 0; i < 1000; ++i)
      CHECK(sample_action(mu, sigma, 3.0, rng).projected.norm() <= 3.0 + 1e-12);
  }
  SECTION("log_prob matches the Gaussian density of the raw sample") {
    const Eigen::Vector2d mu{0.5, -0.2}, sigma{0.7, 1.3};
    const ActionSample s = sample_action(mu, sigma, 3.0, rng);
    CHECK(s.log_prob == Catch::Approx(gaussian_log_prob(s.raw, mu, sigma)));
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  NetConfig cfg;
  Rng rng = make_rng(12);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  save_params(p, "ckpt_test.bin");
  const PolicyParams q = load_params("ckpt_test.bin");
  REQUIRE(q.cfg == p.cfg);
  double diff = 0.0;
  q.for_each([&](const char* name, const Eigen::MatrixXd& m) {
    bool found = false;
    p.for_each([&](const char* n2, const Eigen::MatrixXd& m2) {
      if (std::string(name) == n2) {
        diff += (m - m2).lpNorm<Eigen::Infinity>();
        found = true;
      }
    });
    REQUIRE(found);
  });
  CHECK(diff == 0.0);
}

TEST_CASE("corrupt checkpoints are rejected") {
  NetConfig cfg;
  Rng rng = make_rng(13);
  const PolicyParams p = PolicyParams::init(cfg, rng);
  save_params(p, "ckpt_full.bin");

  SECTION("truncated data block") {
    std::ifstream in("ckpt_full.bin", std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out("ckpt_trunc.bin", std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() * 3 / 4));
    out.close();
    CHECK_THROWS_AS(load_params("ckpt_trunc.bin"), CorruptCheckpoint);
  }
  SECTION("version bump names the version") {
    std::ofstream out("ckpt_ver.bin", std::ios::binary);
    out << "navlab-checkpoint 999\n";
    out.close();
    try {
      load_params("ckpt_ver.bin");
      FAIL("expected CorruptCheckpoint");
    } catch (const CorruptCheckpoint& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
      CHECK(std::string(e.what()).find("999") != std::string::npos);
    }
  }
}

TEST_CASE("adam with gradient clipping moves parameters deterministically") {
  NetConfig cfg;
  cfg.hidden = 8;
  cfg.trunk = 8;
  Rng rng = make_rng(14);
  PolicyParams p1 = PolicyParams::init(cfg, rng);
  PolicyParams p2 = p1;
  AdamState a1(cfg), a2(cfg);
  Rng grng = make_rng(15);
  for (int step = 0; step < 5; ++step) {
    PolicyParams g = random_direction(cfg, grng);
    PolicyParams g_copy = g;
    a1.step(p1, g, 1e-3, 0.5);
    a2.step(p2, g_copy, 1e-3, 0.5);
  }
  PolicyParams diff = p1;
  diff.add_scaled(p2, -1.0);
  CHECK(std::sqrt(diff.squared_norm()) == 0.0);
}
