#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sacpid::nn {

using Mat = Eigen::MatrixXd;  // batch along rows
using Vec = Eigen::VectorXd;

// Fully connected net, ReLU hidden layers, linear output, double precision.
class Mlp {
 public:
  struct Cache {
    std::vector<Mat> acts;  // acts[0] = input, acts[i] = layer i output
  };
  struct Grads {
    std::vector<Mat> w;
    std::vector<Vec> b;
    void scale(double s);
    void add(const Grads& other);
  };

  Mlp() = default;
  // sizes = {in, hidden..., out}; weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Mlp(const std::vector<int>& sizes, std::uint64_t seed);

  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, Cache& cache) const;
  // dout = dL/d(output); returns parameter grads, optionally dL/d(input)
  Grads backward(const Cache& cache, const Mat& dout, Mat* dx = nullptr) const;
  Grads zero_grads() const;

  // this <- (1 - chi) * this + chi * src  (shapes must match)
  void ema_from(const Mlp& src, double chi);

  int in_dim() const { return w_.empty() ? 0 : static_cast<int>(w_.front().rows()); }
  int out_dim() const { return w_.empty() ? 0 : static_cast<int>(w_.back().cols()); }
  std::size_t layer_count() const { return w_.size(); }
  std::vector<Mat>& weights() { return w_; }
  const std::vector<Mat>& weights() const { return w_; }
  std::vector<Vec>& biases() { return b_; }
  const std::vector<Vec>& biases() const { return b_; }

 private:
  std::vector<Mat> w_;  // w[i] is (in x out); y = x * w + b
  std::vector<Vec> b_;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(Mlp& net, const Mlp::Grads& g);

  std::uint64_t steps() const { return t_; }
  std::vector<Mat>& m_w() { return mw_; }
  std::vector<Mat>& v_w() { return vw_; }
  std::vector<Vec>& m_b() { return mb_; }
  std::vector<Vec>& v_b() { return vb_; }
  const std::vector<Mat>& m_w() const { return mw_; }
  const std::vector<Mat>& v_w() const { return vw_; }
  const std::vector<Vec>& m_b() const { return mb_; }
  const std::vector<Vec>& v_b() const { return vb_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  double lr_{}, b1_{0.9}, b2_{0.999}, eps_{1e-8};
  std::uint64_t t_{0};
  std::vector<Mat> mw_, vw_;
  std::vector<Vec> mb_, vb_;
};

// Squashed diagonal Gaussian head.  The trunk emits [mu | log_std] per row;
// log_std is clamped to [ls_lo, ls_hi], the sample is a = tanh(mu + sigma*eps)
// and logp is the squash-corrected Gaussian log density.
struct SquashSample {
  Mat a;      // B x A squashed actions
  Mat pre;    // pre-squash sample
  Vec logp;   // B
  Mat mu, ls, eps;
  Mat gate;   // 1 where log_std was not clamped
};

SquashSample squash_sample(const Mat& head, const Mat& eps, double ls_lo = -20.0,
                           double ls_hi = 2.0);
Mat squash_mean(const Mat& head);
// reparameterized gradients: dJ/da (B x A) and dJ/dlogp (B) -> dJ/dhead
Mat squash_backward(const SquashSample& s, const Mat& dJ_da, const Vec& dJ_dlogp);

}  // namespace sacpid::nn
