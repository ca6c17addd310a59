#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sacpid/nn.hpp"

namespace sacpid::sac {

inline constexpr int kStateDim = 13;
inline constexpr int kActionDim = 6;

// One environment step.  `a` is the pre-scale squashed action in [-1,1]^6;
// storing it (rather than the mapped gains) keeps logpi recomputation
// consistent if the gain bounds are reconfigured.
struct Transition {
  std::array<double, kStateDim> s;
  std::array<double, kActionDim> a;
  double r;
  std::array<double, kStateDim> s2;
  bool terminal;  // true = no bootstrap; step-cap truncation stays false
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(const Transition& t);
  std::size_t size() const { return full_ ? data_.size() : head_; }
  std::size_t capacity() const { return data_.size(); }
  const Transition& at(std::size_t i) const { return data_[i]; }
  std::vector<std::size_t> sample_indices(std::size_t batch,
                                          std::mt19937_64& rng) const;

 private:
  std::vector<Transition> data_;
  std::size_t head_{0};
  bool full_{false};
};

struct SacHyper {
  double alpha = 0.05;
  double gamma = 0.99;
  double lr = 3e-4;         // shared by value, critics, actor
  double chi = 0.005;       // target value blend rate
  int batch = 512;
  int target_interval = 1;
  int grad_steps = 1;
  std::size_t buffer_capacity = 2000000;
  std::vector<int> hidden{512, 512};
  double ls_lo = -20.0, ls_hi = 2.0;
};

struct Batch {
  nn::Mat s;     // B x 13
  nn::Mat a;     // B x 6
  nn::Vec r;     // B
  nn::Mat s2;    // B x 13
  nn::Vec done;  // 1 = terminal
};

Batch gather(const ReplayBuffer& buf, const std::vector<std::size_t>& idx);

struct LossGrads {
  double loss{};
  nn::Mlp::Grads grads;
};

// J_V = mean 1/2 (V(s) - [min_i Q_i(s, a~) - alpha*logpi(a~|s)])^2,
// a~ drawn from the actor with the supplied noise; target term is constant.
LossGrads value_loss(const nn::Mlp& value, const nn::Mlp& critic1,
                     const nn::Mlp& critic2, const nn::Mlp& actor,
                     const Batch& batch, const nn::Mat& eps, double alpha,
                     double ls_lo = -20.0, double ls_hi = 2.0);

// J_Q = mean 1/2 (Q(s,a) - [r + gamma*(1-done)*V_target(s2)])^2
LossGrads critic_loss(const nn::Mlp& critic, const nn::Mlp& target_value,
                      const Batch& batch, double gamma);

// J_pi = mean [alpha*logpi(a~|s) - min_i Q_i(s, a~)], gradients w.r.t. the
// actor only (critics enter through their input gradients).
LossGrads actor_loss(const nn::Mlp& actor, const nn::Mlp& critic1,
                     const nn::Mlp& critic2, const Batch& batch,
                     const nn::Mat& eps, double alpha, double* entropy = nullptr,
                     double ls_lo = -20.0, double ls_hi = 2.0);

struct StepMetrics {
  bool updated{false};
  double value_loss{}, critic1_loss{}, critic2_loss{}, actor_loss{};
  double entropy{};
};

// Thrown when a training step produces a non-finite loss; carries the
// minibatch that triggered it so callers can dump it for diagnosis.
struct DivergedError : std::runtime_error {
  Batch batch;
  StepMetrics metrics;
  DivergedError(const std::string& msg, Batch b, StepMetrics m)
      : std::runtime_error(msg), batch(std::move(b)), metrics(m) {}
};

class Agent {
 public:
  Agent(const SacHyper& hp, std::uint64_t seed);

  // unit action in [-1,1]^6; explore draws through the reparameterized head
  std::array<double, kActionDim> act(const std::array<double, kStateDim>& s,
                                     bool explore);
  // one Algorithm-1 update; no-op (flagged) while buffer <= batch
  StepMetrics train_step(const ReplayBuffer& buf);

  const SacHyper& hyper() const { return hp_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic1() { return critic1_; }
  nn::Mlp& critic2() { return critic2_; }
  nn::Mlp& value() { return value_; }
  nn::Mlp& target_value() { return target_value_; }
  nn::Adam& actor_opt() { return opt_actor_; }
  nn::Adam& critic1_opt() { return opt_c1_; }
  nn::Adam& critic2_opt() { return opt_c2_; }
  nn::Adam& value_opt() { return opt_value_; }
  const nn::Mlp& actor() const { return actor_; }
  const nn::Mlp& critic1() const { return critic1_; }
  const nn::Mlp& critic2() const { return critic2_; }
  const nn::Mlp& value() const { return value_; }
  const nn::Mlp& target_value() const { return target_value_; }
  const nn::Adam& actor_opt() const { return opt_actor_; }
  const nn::Adam& critic1_opt() const { return opt_c1_; }
  const nn::Adam& critic2_opt() const { return opt_c2_; }
  const nn::Adam& value_opt() const { return opt_value_; }

 private:
  nn::Mat draw_eps(int rows);

  SacHyper hp_;
  nn::Mlp actor_, critic1_, critic2_, value_, target_value_;
  nn::Adam opt_actor_, opt_c1_, opt_c2_, opt_value_;
  std::mt19937_64 rng_;
  std::uint64_t update_count_{0};
};

}  // namespace sacpid::sac
