#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sacpid/sac.hpp"

using namespace sacpid;
using sac::Agent;
using sac::Batch;
using sac::kActionDim;
using sac::kStateDim;
using sac::ReplayBuffer;
using sac::SacHyper;
using sac::Transition;
using nn::Mat;
using nn::Mlp;
using nn::Vec;

namespace {

Transition tagged(double tag, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Transition t;
  for (auto& x : t.s) x = u(rng);
  for (auto& x : t.a) x = 0.9 * u(rng);
  for (auto& x : t.s2) x = u(rng);
  t.r = tag;
  t.terminal = false;
  return t;
}

void fill(ReplayBuffer& buf, int n, unsigned seed) {
  std::mt19937 rng(seed);
  for (int i = 0; i < n; ++i) buf.push(tagged(0.1 * i, rng));
}

SacHyper tiny_hyper() {
  SacHyper hp;
  hp.hidden = {16, 16};
  hp.batch = 8;
  hp.buffer_capacity = 256;
  return hp;
}

// max over parameters of |fd - analytic| / max(1, |fd|), central differences
template <typename LossFn>
double fd_check(Mlp& net, const nn::Mlp::Grads& grads, LossFn loss, double h) {
  double worst = 0.0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Mat& w = net.weights()[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) {
        const double keep = w(i, j);
        w(i, j) = keep + h;
        const double up = loss();
        w(i, j) = keep - h;
        const double dn = loss();
        w(i, j) = keep;
        const double fd = (up - dn) / (2 * h);
        worst = std::max(worst, std::abs(fd - grads.w[l](i, j)) /
                                    std::max(1.0, std::abs(fd)));
      }
    Vec& b = net.biases()[l];
    for (int i = 0; i < b.size(); ++i) {
      const double keep = b(i);
      b(i) = keep + h;
      const double up = loss();
      b(i) = keep - h;
      const double dn = loss();
      b(i) = keep;
      const double fd = (up - dn) / (2 * h);
      worst = std::max(worst,
                       std::abs(fd - grads.b[l](i)) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

Mat gaussian(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

bool same_weights(const Mlp& a, const Mlp& b) {
  if (a.layer_count() != b.layer_count()) return false;
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    if (a.weights()[l] != b.weights()[l]) return false;
    if (a.biases()[l] != b.biases()[l]) return false;
  }
  return true;
}

// critic computing exactly -sum_j |a_j| via paired relu units; ignores state
Mlp l1_tent_critic() {
  Mlp c({kStateDim + kActionDim, 2 * kActionDim, 1}, 0);
  c.weights()[0].setZero();
  c.biases()[0].setZero();
  c.weights()[1].setConstant(-1.0);
  c.biases()[1].setZero();
  for (int j = 0; j < kActionDim; ++j) {
    c.weights()[0](kStateDim + j, 2 * j) = 1.0;
    c.weights()[0](kStateDim + j, 2 * j + 1) = -1.0;
  }
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("sac");

TEST_CASE("replay ring evicts oldest first and keeps the rest") {
  ReplayBuffer buf(16);
  std::mt19937 rng(5);
  for (int i = 0; i < 21; ++i) buf.push(tagged(i, rng));
  CHECK(buf.size() == 16);
  CHECK(buf.capacity() == 16);
  std::vector<double> tags;
  for (std::size_t i = 0; i < buf.size(); ++i) tags.push_back(buf.at(i).r);
  std::sort(tags.begin(), tags.end());
  for (int i = 0; i < 16; ++i) CHECK(tags[i] == doctest::Approx(5.0 + i));
}

TEST_CASE("replay sampling is uniform within five sigma") {
  ReplayBuffer buf(100);
  fill(buf, 100, 7);
  std::mt19937_64 rng(11);
  std::vector<int> counts(100, 0);
  const int draws = 100000;
  const auto idx = buf.sample_indices(draws, rng);
  for (auto i : idx) ++counts[i];
  const double expect = draws / 100.0;
  const double sigma = std::sqrt(draws * 0.01 * 0.99);
  for (int c : counts) CHECK(std::abs(c - expect) < 5.0 * sigma);
}

TEST_CASE("value loss on a single sample is half the squared residual") {
  Mlp value({kStateDim, 8, 1}, 1), actor({kStateDim, 8, 2 * kActionDim}, 2);
  Mlp c1({kStateDim + kActionDim, 8, 1}, 3), c2({kStateDim + kActionDim, 8, 1}, 4);
  ReplayBuffer buf(4);
  fill(buf, 1, 9);
  const Batch batch = sac::gather(buf, {0});
  const Mat eps = gaussian(1, kActionDim, 21);
  const double alpha = 0.05;

  // recompute the target through the public primitives
  const auto samp = nn::squash_sample(actor.forward(batch.s), eps);
  Mat x(1, kStateDim + kActionDim);
  x << batch.s, samp.a;
  const double q = std::min(c1.forward(x)(0, 0), c2.forward(x)(0, 0));
  const double y = q - alpha * samp.logp(0);
  const double v = value.forward(batch.s)(0, 0);

  const auto got = sac::value_loss(value, c1, c2, actor, batch, eps, alpha);
  CHECK(got.loss == doctest::Approx(0.5 * (v - y) * (v - y)).epsilon(1e-12));

  // a value net pinned to the target makes the loss vanish
  Mlp flat({kStateDim, 8, 1}, 5);
  flat.weights()[0].setZero();
  flat.biases()[0].setZero();
  flat.weights()[1].setZero();
  flat.biases()[1](0) = y;
  const auto zero = sac::value_loss(flat, c1, c2, actor, batch, eps, alpha);
  CHECK(zero.loss == 0.0);
}

TEST_CASE("critic targets mask bootstrap on terminal and at gamma zero") {
  Mlp critic({kStateDim + kActionDim, 8, 1}, 6), target({kStateDim, 8, 1}, 7);
  std::mt19937 rng(13);
  ReplayBuffer buf(4);
  Transition t = tagged(1.7, rng);
  t.terminal = true;
  buf.push(t);
  const Batch batch = sac::gather(buf, {0});

  // zeroed critic outputs 0, so the loss exposes the target directly
  Mlp zeroed = critic;
  for (std::size_t l = 0; l < zeroed.layer_count(); ++l) {
    zeroed.weights()[l].setZero();
    zeroed.biases()[l].setZero();
  }
  const auto terminal = sac::critic_loss(zeroed, target, batch, 0.99);
  CHECK(terminal.loss == doctest::Approx(0.5 * 1.7 * 1.7).epsilon(1e-12));

  Transition live = tagged(-0.6, rng);
  live.terminal = false;
  ReplayBuffer buf2(4);
  buf2.push(live);
  const Batch b2 = sac::gather(buf2, {0});
  const auto gamma0 = sac::critic_loss(zeroed, target, b2, 0.0);
  CHECK(gamma0.loss == doctest::Approx(0.5 * 0.6 * 0.6).epsilon(1e-12));
}

TEST_CASE("loss gradients agree with central differences") {
  Mlp value({kStateDim, 12, 1}, 31), actor({kStateDim, 12, 2 * kActionDim}, 32);
  Mlp c1({kStateDim + kActionDim, 12, 1}, 33);
  Mlp c2({kStateDim + kActionDim, 12, 1}, 34);
  Mlp target({kStateDim, 12, 1}, 35);
  ReplayBuffer buf(16);
  fill(buf, 16, 41);
  // mixed terminal flags so the done mask is exercised
  std::mt19937 rng(43);
  Transition t = tagged(0.9, rng);
  t.terminal = true;
  buf.push(t);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < buf.size(); ++i) idx.push_back(i);
  const Batch batch = sac::gather(buf, idx);
  const Mat eps = gaussian(static_cast<int>(idx.size()), kActionDim, 51);
  const double alpha = 0.07, gamma = 0.97, h = 1e-6;

  SUBCASE("value") {
    const auto g = sac::value_loss(value, c1, c2, actor, batch, eps, alpha);
    const double worst = fd_check(value, g.grads, [&] {
      return sac::value_loss(value, c1, c2, actor, batch, eps, alpha).loss;
    }, h);
    CHECK(worst < 1e-5);
  }
  SUBCASE("critic") {
    const auto g = sac::critic_loss(c1, target, batch, gamma);
    const double worst = fd_check(c1, g.grads, [&] {
      return sac::critic_loss(c1, target, batch, gamma).loss;
    }, h);
    CHECK(worst < 1e-5);
  }
  SUBCASE("actor") {
    const auto g = sac::actor_loss(actor, c1, c2, batch, eps, alpha);
    const double worst = fd_check(actor, g.grads, [&] {
      return sac::actor_loss(actor, c1, c2, batch, eps, alpha).loss;
    }, h);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("actor gradient vanishes with flat critics and zero temperature") {
  Mlp actor({kStateDim, 8, 2 * kActionDim}, 61);
  Mlp flat1({kStateDim + kActionDim, 8, 1}, 62);
  for (std::size_t l = 0; l < flat1.layer_count(); ++l) {
    flat1.weights()[l].setZero();
    flat1.biases()[l].setZero();
  }
  flat1.biases()[1](0) = 3.0;
  Mlp flat2 = flat1;
  ReplayBuffer buf(8);
  fill(buf, 8, 63);
  const Batch batch = sac::gather(buf, {0, 1, 2, 3, 4, 5, 6, 7});
  const Mat eps = gaussian(8, kActionDim, 64);
  const auto g = sac::actor_loss(actor, flat1, flat2, batch, eps, 0.0);
  CHECK(g.loss == doctest::Approx(-3.0).epsilon(1e-12));
  for (std::size_t l = 0; l < actor.layer_count(); ++l) {
    CHECK(g.grads.w[l].cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.grads.b[l].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("twin critic swap leaves losses unchanged") {
  Mlp value({kStateDim, 10, 1}, 71), actor({kStateDim, 10, 2 * kActionDim}, 72);
  Mlp c1({kStateDim + kActionDim, 10, 1}, 73);
  Mlp c2({kStateDim + kActionDim, 10, 1}, 74);
  ReplayBuffer buf(8);
  fill(buf, 8, 75);
  const Batch batch = sac::gather(buf, {0, 1, 2, 3, 4, 5, 6, 7});
  const Mat eps = gaussian(8, kActionDim, 76);
  const auto v12 = sac::value_loss(value, c1, c2, actor, batch, eps, 0.05);
  const auto v21 = sac::value_loss(value, c2, c1, actor, batch, eps, 0.05);
  CHECK(v12.loss == v21.loss);
  const auto a12 = sac::actor_loss(actor, c1, c2, batch, eps, 0.05);
  const auto a21 = sac::actor_loss(actor, c2, c1, batch, eps, 0.05);
  CHECK(a12.loss == a21.loss);
  for (std::size_t l = 0; l < actor.layer_count(); ++l)
    CHECK((a12.grads.w[l] - a21.grads.w[l]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("larger temperature prefers wider policies on a fixed batch") {
  // two toy states replicated so the sample mean approximates the expectation
  const int reps = 1500;
  ReplayBuffer buf(2);
  fill(buf, 2, 81);
  std::vector<std::size_t> idx;
  for (int i = 0; i < 2 * reps; ++i) idx.push_back(i % 2);
  const Batch batch = sac::gather(buf, idx);
  const Mat eps = gaussian(2 * reps, kActionDim, 82);

  const Mlp c1 = l1_tent_critic(), c2 = l1_tent_critic();
  Mlp actor({kStateDim, 2 * kActionDim}, 0);  // constant head via the bias
  actor.weights()[0].setZero();
  actor.biases()[0].setZero();

  auto argmin_ls = [&](double alpha) {
    double best = 1e300, best_ls = 0.0;
    for (double ls = -5.5; ls <= 0.0; ls += 0.05) {
      for (int j = 0; j < kActionDim; ++j) actor.biases()[0](kActionDim + j) = ls;
      const double J = sac::actor_loss(actor, c1, c2, batch, eps, alpha).loss;
      if (J < best) {
        best = J;
        best_ls = ls;
      }
    }
    return best_ls;
  };

  const double a1 = argmin_ls(0.01), a2 = argmin_ls(0.05), a3 = argmin_ls(0.2);
  CHECK(a1 < a2);
  CHECK(a2 < a3);
  // small-sigma stationarity: sigma* = alpha*sqrt(pi/2) for the |a| critic
  CHECK(std::abs(a1 - std::log(0.01 * std::sqrt(M_PI / 2))) < 0.5);
  CHECK(std::abs(a2 - std::log(0.05 * std::sqrt(M_PI / 2))) < 0.5);
  CHECK(std::abs(a3 - std::log(0.2 * std::sqrt(M_PI / 2))) < 0.5);
}

TEST_CASE("exploit is deterministic and explore streams are seeded") {
  Agent a(tiny_hyper(), 90), b(tiny_hyper(), 90), c(tiny_hyper(), 91);
  std::array<double, kStateDim> s{};
  for (int i = 0; i < kStateDim; ++i) s[i] = 0.1 * i - 0.6;
  CHECK(a.act(s, false) == a.act(s, false));
  CHECK(a.act(s, false) == b.act(s, false));
  bool all_same = true, cross_same = true;
  for (int k = 0; k < 5; ++k) {
    const auto ea = a.act(s, true), eb = b.act(s, true), ec = c.act(s, true);
    all_same = all_same && ea == eb;
    cross_same = cross_same && ea == ec;
  }
  CHECK(all_same);
  CHECK(!cross_same);
}

TEST_CASE("train step is a flagged no-op until the buffer exceeds the batch") {
  Agent agent(tiny_hyper(), 100);
  ReplayBuffer buf(64);
  fill(buf, tiny_hyper().batch, 101);  // exactly batch-many: still too small
  const Mlp before = agent.value();
  const auto idle = agent.train_step(buf);
  CHECK(!idle.updated);
  CHECK(same_weights(before, agent.value()));
  std::mt19937 rng(102);
  buf.push(tagged(0.5, rng));
  const auto live = agent.train_step(buf);
  CHECK(live.updated);
  CHECK(!same_weights(before, agent.value()));
  CHECK(std::isfinite(live.value_loss));
  CHECK(std::isfinite(live.critic1_loss));
  CHECK(std::isfinite(live.critic2_loss));
  CHECK(std::isfinite(live.actor_loss));
}

TEST_CASE("one training step applies the listed update order") {
  const SacHyper hp = tiny_hyper();
  const std::uint64_t seed = 110;
  Agent agent(hp, seed);
  ReplayBuffer buf(64);
  fill(buf, 40, 111);

  // copies of everything before the step
  Mlp value = agent.value(), c1 = agent.critic1(), c2 = agent.critic2();
  Mlp actor = agent.actor(), target = agent.target_value();
  nn::Adam ov = agent.value_opt(), o1 = agent.critic1_opt();
  nn::Adam o2 = agent.critic2_opt(), oa = agent.actor_opt();

  // mirror the agent's draw discipline: indices, then value noise, then
  // actor noise, all from one generator seeded like the agent's
  std::mt19937_64 rng(seed);
  const auto idx = buf.sample_indices(hp.batch, rng);
  auto draw = [&] {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(hp.batch, kActionDim);
    for (int i = 0; i < hp.batch; ++i)
      for (int j = 0; j < kActionDim; ++j) m(i, j) = g(rng);
    return m;
  };
  const Mat eps_v = draw(), eps_a = draw();
  const Batch batch = sac::gather(buf, idx);

  const auto v = sac::value_loss(value, c1, c2, actor, batch, eps_v, hp.alpha);
  ov.step(value, v.grads);
  const auto q1 = sac::critic_loss(c1, target, batch, hp.gamma);
  o1.step(c1, q1.grads);
  const auto q2 = sac::critic_loss(c2, target, batch, hp.gamma);
  o2.step(c2, q2.grads);
  const auto pi = sac::actor_loss(actor, c1, c2, batch, eps_a, hp.alpha);
  oa.step(actor, pi.grads);
  target.ema_from(value, hp.chi);

  const auto m = agent.train_step(buf);
  CHECK(m.updated);
  CHECK(m.value_loss == v.loss);
  CHECK(m.critic1_loss == q1.loss);
  CHECK(m.critic2_loss == q2.loss);
  CHECK(m.actor_loss == pi.loss);
  CHECK(same_weights(value, agent.value()));
  CHECK(same_weights(c1, agent.critic1()));
  CHECK(same_weights(c2, agent.critic2()));
  CHECK(same_weights(actor, agent.actor()));
  CHECK(same_weights(target, agent.target_value()));
}

TEST_CASE("fixed seed training is bit identical across reruns") {
  ReplayBuffer buf(64);
  fill(buf, 50, 120);
  Agent a(tiny_hyper(), 121), b(tiny_hyper(), 121);
  for (int k = 0; k < 5; ++k) {
    const auto ma = a.train_step(buf), mb = b.train_step(buf);
    CHECK(ma.value_loss == mb.value_loss);
    CHECK(ma.critic1_loss == mb.critic1_loss);
    CHECK(ma.critic2_loss == mb.critic2_loss);
    CHECK(ma.actor_loss == mb.actor_loss);
  }
  CHECK(same_weights(a.actor(), b.actor()));
  CHECK(same_weights(a.target_value(), b.target_value()));
}

TEST_CASE("target blending is a hard copy at one, frozen at zero, geometric") {
  Mlp t({4, 3}, 130), s({4, 3}, 131);
  Mlp frozen = t;
  frozen.ema_from(s, 0.0);
  CHECK(same_weights(frozen, t));
  Mlp copied = t;
  copied.ema_from(s, 1.0);
  CHECK(same_weights(copied, s));
  // fixed source: the gap contracts by exactly (1 - chi) each update
  Mlp ema = t;
  const double chi = 0.005;
  double prev = (ema.weights()[0] - s.weights()[0]).cwiseAbs().maxCoeff();
  for (int k = 0; k < 20; ++k) {
    ema.ema_from(s, chi);
    const double gap = (ema.weights()[0] - s.weights()[0]).cwiseAbs().maxCoeff();
    CHECK(gap == doctest::Approx(prev * (1 - chi)).epsilon(1e-12));
    prev = gap;
  }
}

TEST_CASE("soft backup converges and boltzmann improvement holds on the toy") {
  // two states, two actions; choosing action b moves to state b
  oracle::SoftToyMdp mdp;
  mdp.nS = 2;
  mdp.nA = 2;
  mdp.gamma = 0.9;
  mdp.alpha = 0.05;
  mdp.r = {0.5, 0.0, 0.0, 1.0};
  mdp.p = {1, 0, 0, 1, 1, 0, 0, 1};

  std::vector<double> pi{0.5, 0.5, 0.5, 0.5};
  std::vector<double> q(4, 0.0);
  double last = 1e300;
  double resid = 0.0;
  for (int it = 0; it < 600; ++it) {
    const auto next = oracle::soft_backup(mdp, q, pi);
    resid = 0.0;
    for (int i = 0; i < 4; ++i) resid = std::max(resid, std::abs(next[i] - q[i]));
    if (it > 5) CHECK(resid <= last + 1e-12);
    last = resid;
    q = next;
  }
  CHECK(resid < 1e-8);

  // one Boltzmann improvement step, evaluated at its own fixed point
  const std::vector<int> held_out{0, 1};
  const double before = oracle::soft_objective(mdp, q, pi, held_out);
  const auto pi2 = oracle::boltzmann_policy(mdp, q);
  std::vector<double> q2(4, 0.0);
  for (int it = 0; it < 600; ++it) q2 = oracle::soft_backup(mdp, q2, pi2);
  const double after = oracle::soft_objective(mdp, q2, pi2, held_out);
  CHECK(after >= before - 1e-8);
}

TEST_CASE("bandit chain training recovers the soft optimal greedy action") {
  // same toy: sign of the first gain dimension picks the discrete action and
  // the chosen action is the next state; myopic play prefers action 0 in
  // state 0, the bootstrapped optimum prefers action 1 — so passing requires
  // real value propagation, not reward chasing
  oracle::SoftToyMdp mdp;
  mdp.nS = 2;
  mdp.nA = 2;
  mdp.gamma = 0.9;
  mdp.alpha = 0.05;
  mdp.r = {0.5, 0.0, 0.0, 1.0};
  mdp.p = {1, 0, 0, 1, 1, 0, 0, 1};
  std::vector<double> q(4, 0.0);
  std::vector<double> pi{0.5, 0.5, 0.5, 0.5};
  for (int it = 0; it < 2000; ++it) {
    pi = oracle::boltzmann_policy(mdp, q);
    q = oracle::soft_backup(mdp, q, pi);
  }
  const int want0 = q[0] >= q[1] ? 0 : 1;
  const int want1 = q[2] >= q[3] ? 0 : 1;
  CHECK(want0 == 1);  // the non-myopic answer
  CHECK(want1 == 1);

  SacHyper hp;
  hp.hidden = {32, 32};
  hp.batch = 64;
  hp.buffer_capacity = 4096;
  hp.lr = 3e-3;
  hp.gamma = mdp.gamma;
  hp.alpha = mdp.alpha;
  Agent agent(hp, 140);
  ReplayBuffer buf(hp.buffer_capacity);

  auto encode = [](int s) {
    std::array<double, kStateDim> x{};
    x.fill(s == 0 ? -0.5 : 0.5);
    x[0] = s == 0 ? -1.0 : 1.0;
    return x;
  };
  int state = 0;
  for (int step = 0; step < 5000; ++step) {
    const auto a = agent.act(encode(state), true);
    const int pick = a[0] > 0.0 ? 1 : 0;
    Transition t;
    t.s = encode(state);
    t.a = a;
    t.r = mdp.r[state * 2 + pick];
    state = pick;
    t.s2 = encode(state);
    t.terminal = false;
    buf.push(t);
    agent.train_step(buf);
  }
  const auto g0 = agent.act(encode(0), false);
  const auto g1 = agent.act(encode(1), false);
  CHECK((g0[0] > 0.0 ? 1 : 0) == want0);
  CHECK((g1[0] > 0.0 ? 1 : 0) == want1);
}

TEST_SUITE_END();
