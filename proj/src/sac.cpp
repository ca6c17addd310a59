#include "sacpid/sac.hpp"

#include <cmath>
#include <stdexcept>

namespace sacpid::sac {

using nn::Mat;
using nn::Vec;

ReplayBuffer::ReplayBuffer(std::size_t capacity) : data_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  data_[head_] = t;
  if (++head_ == data_.size()) {
    head_ = 0;
    full_ = true;
  }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch,
                                                      std::mt19937_64& rng) const {
  if (size() == 0) throw std::logic_error("sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch gather(const ReplayBuffer& buf, const std::vector<std::size_t>& idx) {
  const int B = static_cast<int>(idx.size());
  Batch b;
  b.s.resize(B, kStateDim);
  b.a.resize(B, kActionDim);
  b.r.resize(B);
  b.s2.resize(B, kStateDim);
  b.done.resize(B);
  for (int i = 0; i < B; ++i) {
    const Transition& t = buf.at(idx[i]);
    for (int j = 0; j < kStateDim; ++j) {
      b.s(i, j) = t.s[j];
      b.s2(i, j) = t.s2[j];
    }
    for (int j = 0; j < kActionDim; ++j) b.a(i, j) = t.a[j];
    b.r(i) = t.r;
    b.done(i) = t.terminal ? 1.0 : 0.0;
  }
  return b;
}

namespace {

Mat concat_sa(const Mat& s, const Mat& a) {
  Mat x(s.rows(), s.cols() + a.cols());
  x << s, a;
  return x;
}

// row-wise min of the two critic outputs plus which critic won (1 -> first)
void critic_min(const nn::Mlp& c1, const nn::Mlp& c2, const Mat& x, Vec& qmin,
                Vec& pick_first, nn::Mlp::Cache* cache1 = nullptr,
                nn::Mlp::Cache* cache2 = nullptr) {
  nn::Mlp::Cache l1, l2;
  const Vec q1 = c1.forward(x, cache1 ? *cache1 : l1).col(0);
  const Vec q2 = c2.forward(x, cache2 ? *cache2 : l2).col(0);
  const int B = static_cast<int>(q1.size());
  qmin.resize(B);
  pick_first.resize(B);
  for (int i = 0; i < B; ++i) {
    pick_first(i) = q1(i) <= q2(i) ? 1.0 : 0.0;
    qmin(i) = pick_first(i) != 0.0 ? q1(i) : q2(i);
  }
}

}  // namespace

LossGrads value_loss(const nn::Mlp& value, const nn::Mlp& critic1,
                     const nn::Mlp& critic2, const nn::Mlp& actor,
                     const Batch& batch, const nn::Mat& eps, double alpha,
                     double ls_lo, double ls_hi) {
  const int B = static_cast<int>(batch.s.rows());
  if (B == 0) throw std::invalid_argument("value_loss: empty batch");
  const auto samp = nn::squash_sample(actor.forward(batch.s), eps, ls_lo, ls_hi);
  Vec qmin, pick;
  critic_min(critic1, critic2, concat_sa(batch.s, samp.a), qmin, pick);
  const Vec y = qmin - alpha * samp.logp;  // constant w.r.t. the value net

  nn::Mlp::Cache cache;
  const Vec v = value.forward(batch.s, cache).col(0);
  const Vec res = v - y;
  LossGrads out;
  out.loss = 0.5 * res.squaredNorm() / B;
  out.grads = value.backward(cache, res / B);
  return out;
}

LossGrads critic_loss(const nn::Mlp& critic, const nn::Mlp& target_value,
                      const Batch& batch, double gamma) {
  const int B = static_cast<int>(batch.s.rows());
  if (B == 0) throw std::invalid_argument("critic_loss: empty batch");
  const Vec v2 = target_value.forward(batch.s2).col(0);
  const Vec y = batch.r.array() + gamma * (1.0 - batch.done.array()) * v2.array();

  nn::Mlp::Cache cache;
  const Vec q = critic.forward(concat_sa(batch.s, batch.a), cache).col(0);
  const Vec res = q - y;
  LossGrads out;
  out.loss = 0.5 * res.squaredNorm() / B;
  out.grads = critic.backward(cache, res / B);
  return out;
}

LossGrads actor_loss(const nn::Mlp& actor, const nn::Mlp& critic1,
                     const nn::Mlp& critic2, const Batch& batch,
                     const nn::Mat& eps, double alpha, double* entropy,
                     double ls_lo, double ls_hi) {
  const int B = static_cast<int>(batch.s.rows());
  if (B == 0) throw std::invalid_argument("actor_loss: empty batch");
  nn::Mlp::Cache actor_cache;
  const auto samp =
      nn::squash_sample(actor.forward(batch.s, actor_cache), eps, ls_lo, ls_hi);

  nn::Mlp::Cache c1_cache, c2_cache;
  Vec qmin, pick;
  critic_min(critic1, critic2, concat_sa(batch.s, samp.a), qmin, pick, &c1_cache,
             &c2_cache);

  LossGrads out;
  out.loss = (alpha * samp.logp - qmin).mean();
  if (entropy) *entropy = -samp.logp.mean();

  // dJ/da flows through the winning critic's input gradient only
  Mat din1, din2;
  const Mat d1 = (-pick / B).matrix();
  const Mat d2 = ((pick.array() - 1.0) / B).matrix();
  critic1.backward(c1_cache, d1, &din1);
  critic2.backward(c2_cache, d2, &din2);
  const Mat dJ_da = din1.rightCols(kActionDim) + din2.rightCols(kActionDim);
  const Vec dJ_dlogp = Vec::Constant(B, alpha / B);
  const Mat dhead = nn::squash_backward(samp, dJ_da, dJ_dlogp);
  out.grads = actor.backward(actor_cache, dhead);
  return out;
}

Agent::Agent(const SacHyper& hp, std::uint64_t seed) : hp_(hp), rng_(seed) {
  auto sizes = [&](int in, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hp_.hidden.begin(), hp_.hidden.end());
    s.push_back(out);
    return s;
  };
  actor_ = nn::Mlp(sizes(kStateDim, 2 * kActionDim), seed + 1);
  critic1_ = nn::Mlp(sizes(kStateDim + kActionDim, 1), seed + 2);
  critic2_ = nn::Mlp(sizes(kStateDim + kActionDim, 1), seed + 3);
  value_ = nn::Mlp(sizes(kStateDim, 1), seed + 4);
  target_value_ = value_;
  opt_actor_ = nn::Adam(actor_, hp_.lr);
  opt_c1_ = nn::Adam(critic1_, hp_.lr);
  opt_c2_ = nn::Adam(critic2_, hp_.lr);
  opt_value_ = nn::Adam(value_, hp_.lr);
}

nn::Mat Agent::draw_eps(int rows) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat eps(rows, kActionDim);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < kActionDim; ++j) eps(i, j) = gauss(rng_);
  return eps;
}

std::array<double, kActionDim> Agent::act(const std::array<double, kStateDim>& s,
                                          bool explore) {
  Mat x(1, kStateDim);
  for (int j = 0; j < kStateDim; ++j) x(0, j) = s[j];
  const Mat head = actor_.forward(x);
  Mat a;
  if (explore) {
    a = nn::squash_sample(head, draw_eps(1), hp_.ls_lo, hp_.ls_hi).a;
  } else {
    a = nn::squash_mean(head);
  }
  std::array<double, kActionDim> out;
  for (int j = 0; j < kActionDim; ++j) out[j] = a(0, j);
  return out;
}

StepMetrics Agent::train_step(const ReplayBuffer& buf) {
  StepMetrics m;
  if (buf.size() <= static_cast<std::size_t>(hp_.batch)) return m;  // guard
  for (int g = 0; g < hp_.grad_steps; ++g) {
    const auto idx = buf.sample_indices(hp_.batch, rng_);
    const Batch batch = gather(buf, idx);
    const Mat eps_v = draw_eps(hp_.batch);
    const Mat eps_a = draw_eps(hp_.batch);

    auto v = value_loss(value_, critic1_, critic2_, actor_, batch, eps_v,
                        hp_.alpha, hp_.ls_lo, hp_.ls_hi);
    opt_value_.step(value_, v.grads);

    auto c1 = critic_loss(critic1_, target_value_, batch, hp_.gamma);
    opt_c1_.step(critic1_, c1.grads);
    auto c2 = critic_loss(critic2_, target_value_, batch, hp_.gamma);
    opt_c2_.step(critic2_, c2.grads);

    auto a = actor_loss(actor_, critic1_, critic2_, batch, eps_a, hp_.alpha,
                        &m.entropy, hp_.ls_lo, hp_.ls_hi);
    opt_actor_.step(actor_, a.grads);

    if (++update_count_ % static_cast<std::uint64_t>(hp_.target_interval) == 0)
      target_value_.ema_from(value_, hp_.chi);

    m.updated = true;
    m.value_loss = v.loss;
    m.critic1_loss = c1.loss;
    m.critic2_loss = c2.loss;
    m.actor_loss = a.loss;
    if (!std::isfinite(v.loss) || !std::isfinite(c1.loss) ||
        !std::isfinite(c2.loss) || !std::isfinite(a.loss)) {
      throw DivergedError("non-finite loss in training step", batch, m);
    }
  }
  return m;
}

}  // namespace sacpid::sac
