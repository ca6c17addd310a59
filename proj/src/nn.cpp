#include "sacpid/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sacpid::nn {

namespace {
constexpr double kSquashEps = 1e-6;
constexpr double kLogRoot2Pi = 0.9189385332046727;  // 0.5*log(2*pi)
}  // namespace

void Mlp::Grads::scale(double s) {
  for (auto& m : w) m *= s;
  for (auto& v : b) v *= s;
}

void Mlp::Grads::add(const Grads& other) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] += other.w[i];
    b[i] += other.b[i];
  }
}

Mlp::Mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least two sizes");
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i], out = sizes[i + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("mlp sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat w(in, out);
    for (int r = 0; r < in; ++r)
      for (int c = 0; c < out; ++c) w(r, c) = dist(rng);
    Vec b(out);
    for (int c = 0; c < out; ++c) b(c) = dist(rng);
    w_.push_back(std::move(w));
    b_.push_back(std::move(b));
  }
}

Mat Mlp::forward(const Mat& x) const {
  Cache cache;
  return forward(x, cache);
}

Mat Mlp::forward(const Mat& x, Cache& cache) const {
  if (x.cols() != w_.front().rows())
    throw std::invalid_argument("mlp forward: wrong input width");
  cache.acts.clear();
  cache.acts.reserve(w_.size() + 1);
  cache.acts.push_back(x);
  Mat h = x;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    h = (h * w_[i]).rowwise() + b_[i].transpose();
    if (i + 1 < w_.size()) h = h.cwiseMax(0.0);  // ReLU on hidden layers
    cache.acts.push_back(h);
  }
  return h;
}

Mlp::Grads Mlp::backward(const Cache& cache, const Mat& dout, Mat* dx) const {
  Grads g = zero_grads();
  Mat delta = dout;
  for (int i = static_cast<int>(w_.size()) - 1; i >= 0; --i) {
    g.w[i] = cache.acts[i].transpose() * delta;
    g.b[i] = delta.colwise().sum().transpose();
    if (i > 0) {
      delta = delta * w_[i].transpose();
      // ReLU mask: the cached post-activation is positive iff the pre-
      // activation was
      delta = ((cache.acts[i].array() > 0.0).cast<double>() * delta.array()).matrix();
    } else if (dx) {
      *dx = delta * w_[0].transpose();
    }
  }
  return g;
}

Mlp::Grads Mlp::zero_grads() const {
  Grads g;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    g.w.push_back(Mat::Zero(w_[i].rows(), w_[i].cols()));
    g.b.push_back(Vec::Zero(b_[i].size()));
  }
  return g;
}

void Mlp::ema_from(const Mlp& src, double chi) {
  for (std::size_t i = 0; i < w_.size(); ++i) {
    w_[i] = (1.0 - chi) * w_[i] + chi * src.w_[i];
    b_[i] = (1.0 - chi) * b_[i] + chi * src.b_[i];
  }
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& w : net.weights()) {
    mw_.push_back(Mat::Zero(w.rows(), w.cols()));
    vw_.push_back(Mat::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : net.biases()) {
    mb_.push_back(Vec::Zero(b.size()));
    vb_.push_back(Vec::Zero(b.size()));
  }
}

void Adam::step(Mlp& net, const Mlp::Grads& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    mw_[i] = b1_ * mw_[i] + (1.0 - b1_) * g.w[i];
    vw_[i] = b2_ * vw_[i].array() + (1.0 - b2_) * g.w[i].array().square();
    net.weights()[i].array() -=
        lr_ * (mw_[i].array() / c1) / ((vw_[i].array() / c2).sqrt() + eps_);
    mb_[i] = b1_ * mb_[i] + (1.0 - b1_) * g.b[i];
    vb_[i] = b2_ * vb_[i].array() + (1.0 - b2_) * g.b[i].array().square();
    net.biases()[i].array() -=
        lr_ * (mb_[i].array() / c1) / ((vb_[i].array() / c2).sqrt() + eps_);
  }
}

SquashSample squash_sample(const Mat& head, const Mat& eps, double ls_lo,
                           double ls_hi) {
  const auto A = head.cols() / 2;
  if (head.cols() != 2 * A || eps.cols() != A || eps.rows() != head.rows())
    throw std::invalid_argument("squash_sample: inconsistent shapes");
  SquashSample s;
  s.mu = head.leftCols(A);
  const Mat ls_raw = head.rightCols(A);
  s.ls = ls_raw.array().min(ls_hi).max(ls_lo).matrix();
  s.gate = ((ls_raw.array() > ls_lo) && (ls_raw.array() < ls_hi))
               .cast<double>()
               .matrix();
  s.eps = eps;
  const Mat sigma = s.ls.array().exp().matrix();
  s.pre = (s.mu.array() + sigma.array() * eps.array()).matrix();
  s.a = s.pre.array().tanh().matrix();
  const Mat sq = (1.0 - s.a.array().square()).matrix();
  s.logp = (-0.5 * eps.array().square() - s.ls.array() - kLogRoot2Pi -
            (sq.array() + kSquashEps).log())
               .rowwise()
               .sum()
               .matrix();
  return s;
}

Mat squash_mean(const Mat& head) {
  return head.leftCols(head.cols() / 2).array().tanh();
}

Mat squash_backward(const SquashSample& s, const Mat& dJ_da, const Vec& dJ_dlogp) {
  const auto B = s.a.rows(), A = s.a.cols();
  const Mat one_m_a2 = (1.0 - s.a.array().square()).matrix();
  const Mat sigma_eps = (s.ls.array().exp() * s.eps.array()).matrix();
  // d logp / d pre, elementwise: 2a(1-a^2) / (1-a^2+eps)
  const Mat dlogp_dpre = (2.0 * s.a.array() * one_m_a2.array() /
                          (one_m_a2.array() + kSquashEps))
                             .matrix();
  const Mat da_term = (dJ_da.array() * one_m_a2.array()).matrix();
  // per-row weight for the logp path
  const Mat logp_w = dJ_dlogp * Eigen::RowVectorXd::Ones(A);
  Mat dhead(B, 2 * A);
  // mu: pre shifts one-for-one
  dhead.leftCols(A) =
      (da_term.array() + dlogp_dpre.array() * logp_w.array()).matrix();
  // log_std: pre shifts by sigma*eps, plus the direct -1 in logp; the clamp
  // gates everything
  dhead.rightCols(A) =
      (s.gate.array() *
       (da_term.array() * sigma_eps.array() +
        (dlogp_dpre.array() * sigma_eps.array() - 1.0) * logp_w.array()))
          .matrix();
  return dhead;
}

}  // namespace sacpid::nn
