#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sacpid/pid.hpp"

using namespace sacpid::pid;

TEST_SUITE("pid") {

TEST_CASE("incremental update matches one hand-worked step") {
  // kp=2, ki=0.5, kd=1 on e = (1, 0.5, 0.25):
  // 2*(0.5) + 0.5*1 + 1*(1 - 1 + 0.25) = 1.75
  CHECK(pid_increment(2.0, 0.5, 1.0, 1.0, 0.5, 0.25) ==
        doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("increments telescope to the positional controller") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> err(-1.0, 1.0), gain(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double kp = gain(rng), ki = gain(rng), kd = gain(rng);
    std::vector<double> es;
    ErrorHistory h;
    double u = 0.0;
    for (int t = 0; t < 50; ++t) {
      es.push_back(err(rng));
      h.push(es.back());
      u += pid_increment(kp, ki, kd, h.e0(), h.e1(), h.e2());
      CHECK(u == doctest::Approx(oracle::positional_pid(kp, ki, kd, es)).epsilon(1e-10));
    }
  }
}

TEST_CASE("error history rolls and resets") {
  ErrorHistory h;
  CHECK(h.e0() == 0.0);
  CHECK(h.e2() == 0.0);
  h.push(1.0);
  h.push(2.0);
  h.push(3.0);
  CHECK(h.e0() == 3.0);
  CHECK(h.e1() == 2.0);
  CHECK(h.e2() == 1.0);
  h.push(4.0);
  CHECK(h.e2() == 2.0);
  h.reset();
  CHECK(h.e0() == 0.0);
  CHECK(h.e1() == 0.0);
}

TEST_CASE("gain bounds clamp and map from the unit cube") {
  GainBounds b;
  SUBCASE("defaults cover the published ranges") {
    CHECK(b.lo[0] == -20.0);
    CHECK(b.hi[0] == 20.0);
    CHECK(b.lo[1] == 0.0);
    CHECK(b.hi[1] == 0.5);
    CHECK(b.hi[2] == 0.1);
    CHECK(b.lo[3] == -0.1);
    CHECK(b.hi[4] == 0.1);
    CHECK(b.hi[5] == 0.1);
  }
  SUBCASE("clamp saturates out-of-range gains") {
    const auto k = b.clamp({-30.0, 1.0, -1.0, 0.2, -0.2, 0.05});
    CHECK(k[0] == -20.0);
    CHECK(k[1] == 0.5);
    CHECK(k[2] == 0.0);
    CHECK(k[3] == 0.1);
    CHECK(k[4] == -0.1);
    CHECK(k[5] == 0.05);
  }
  SUBCASE("unit endpoints and midpoint") {
    const auto klo = b.from_unit({-1, -1, -1, -1, -1, -1});
    const auto khi = b.from_unit({1, 1, 1, 1, 1, 1});
    const auto kmid = b.from_unit({0, 0, 0, 0, 0, 0});
    for (int i = 0; i < 6; ++i) {
      CHECK(klo[i] == b.lo[i]);
      CHECK(khi[i] == b.hi[i]);
      CHECK(kmid[i] == doctest::Approx(0.5 * (b.lo[i] + b.hi[i])).epsilon(1e-15));
    }
    // out-of-range raw actions saturate rather than extrapolate
    CHECK(b.from_unit({5, 0, 0, 0, 0, 0})[0] == 20.0);
  }
}

TEST_CASE("angular command combines both branches and clamps") {
  ControlConfig cfg;
  GainVector k{2.0, 0.5, 1.0, 1.0, 0.2, 0.1};
  ErrorHistory m, c;
  m.push(0.25);
  m.push(0.5);  // e = (0.5, 0.25, 0)
  c.push(-0.2);
  c.push(-0.4);  // e = (-0.4, -0.2, 0)
  // dm = 2*0.25 + 0.5*0.5 + 1*(0.5-0.5+0) = 0.75
  // dc = 1*(-0.2) + 0.2*(-0.4) + 0.1*(-0.4+0.4+0) = -0.28
  const double w = angular_command(0.1, k, m, c, cfg);
  CHECK(w == doctest::Approx(0.1 + 0.75 + 0.5 * -0.28).epsilon(1e-12));
  // saturation at +-omega_max
  CHECK(angular_command(1.9, k, m, c, cfg) == 2.0);
  GainVector kneg{-8.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(angular_command(-1.5, kneg, m, c, cfg) == -2.0);
}

TEST_CASE("speed schedule slows with lateral offset") {
  ControlConfig cfg;
  CHECK(linear_command(0.0, cfg) == doctest::Approx(0.35));
  CHECK(linear_command(1.0, cfg) == doctest::Approx(0.10));
  CHECK(linear_command(-1.0, cfg) == doctest::Approx(0.10));
  CHECK(linear_command(0.6, cfg) == doctest::Approx(0.20));
  // schedule never leaves [v_min, b_x] even for out-of-range inputs
  CHECK(linear_command(3.0, cfg) == 0.10);
  for (double x = -1.0; x <= 1.0; x += 0.05) {
    const double v = linear_command(x, cfg);
    CHECK(v >= 0.10);
    CHECK(v <= 0.35);
  }
}

}  // TEST_SUITE
