#pragma once
#include <array>

namespace sacpid::pid {

// gain layout: [k_mp, k_mi, k_md, k_cp, k_ci, k_cd]
using GainVector = std::array<double, 6>;

struct GainBounds {
  std::array<double, 6> lo{-20.0, 0.0, 0.0, -0.1, -0.1, 0.0};
  std::array<double, 6> hi{20.0, 0.5, 0.1, 0.1, 0.1, 0.1};

  GainVector clamp(const GainVector& k) const;
  // affine map from squashed actions in [-1,1] to the gain ranges
  GainVector from_unit(const std::array<double, 6>& a) const;
};

// rolling window e(t), e(t-1), e(t-2), zero initialised
class ErrorHistory {
 public:
  void reset() { e_ = {0.0, 0.0, 0.0}; }
  void push(double e) {
    e_[2] = e_[1];
    e_[1] = e_[0];
    e_[0] = e;
  }
  double e0() const { return e_[0]; }
  double e1() const { return e_[1]; }
  double e2() const { return e_[2]; }

 private:
  std::array<double, 3> e_{};
};

// incremental PID update:
// du = kp*(e0-e1) + ki*e0 + kd*(e0 - 2*e1 + e2)
double pid_increment(double kp, double ki, double kd, double e0, double e1,
                     double e2);

struct ControlConfig {
  double eta = 0.5;       // weight of the curvature branch
  double omega_max = 2.0;
  // speed schedule v = b_x - a_x*|x4|, kept within [v_min, b_x]
  double a_x = 0.25;
  double b_x = 0.35;
  double v_min = 0.1;
};

// w_t = w_{t-1} + du_main + eta * du_curv, clamped to +-omega_max
double angular_command(double w_prev, const GainVector& k,
                       const ErrorHistory& main_err, const ErrorHistory& curv_err,
                       const ControlConfig& cfg);

double linear_command(double x4, const ControlConfig& cfg);

}  // namespace sacpid::pid
