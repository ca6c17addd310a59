#include "sacpid/pid.hpp"

#include <algorithm>
#include <cmath>

namespace sacpid::pid {

GainVector GainBounds::clamp(const GainVector& k) const {
  GainVector out;
  for (int i = 0; i < 6; ++i) out[i] = std::clamp(k[i], lo[i], hi[i]);
  return out;
}

GainVector GainBounds::from_unit(const std::array<double, 6>& a) const {
  GainVector out;
  for (int i = 0; i < 6; ++i) {
    const double t = std::clamp(a[i], -1.0, 1.0);
    out[i] = lo[i] + 0.5 * (t + 1.0) * (hi[i] - lo[i]);
  }
  return out;
}

double pid_increment(double kp, double ki, double kd, double e0, double e1,
                     double e2) {
  return kp * (e0 - e1) + ki * e0 + kd * (e0 - 2.0 * e1 + e2);
}

double angular_command(double w_prev, const GainVector& k,
                       const ErrorHistory& main_err, const ErrorHistory& curv_err,
                       const ControlConfig& cfg) {
  const double dm = pid_increment(k[0], k[1], k[2], main_err.e0(), main_err.e1(),
                                  main_err.e2());
  const double dc = pid_increment(k[3], k[4], k[5], curv_err.e0(), curv_err.e1(),
                                  curv_err.e2());
  return std::clamp(w_prev + dm + cfg.eta * dc, -cfg.omega_max, cfg.omega_max);
}

double linear_command(double x4, const ControlConfig& cfg) {
  return std::clamp(cfg.b_x - cfg.a_x * std::abs(x4), cfg.v_min, cfg.b_x);
}

}  // namespace sacpid::pid
