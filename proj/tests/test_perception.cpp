#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sacpid/perception.hpp"

using namespace sacpid::percep;

namespace {

// vertical band [c0, c1] over all rows
BinaryImage band_image(int w, int h, int c0, int c1) {
  BinaryImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = c0; c <= c1; ++c) img.set(c, r, 1);
  return img;
}

// orthographic downward view of a circular arc through the robot origin,
// turning left (centre at lateral +R) or right (centre at -R)
BinaryImage top_arc_image(double R, bool left, double width = 0.04) {
  // columns grow toward the robot's left, matching the rendered views
  BinaryImage img(72, 72);
  const double cy = left ? R : -R;
  for (int v = 0; v < 72; ++v)
    for (int u = 0; u < 72; ++u) {
      const double f = (71 - v + 0.5) * 0.01;
      const double l = (u - 35.5) * 0.01;
      if (std::abs(std::hypot(f, l - cy) - R) <= 0.5 * width) img.set(u, v, 1);
    }
  return img;
}

}  // namespace

TEST_SUITE("perception") {

TEST_CASE("fork classification follows the scaled window statistic") {
  PerceptionConfig cfg;
  std::mt19937 rng(11);
  std::bernoulli_distribution ink(0.3);
  for (int trial = 0; trial < 30; ++trial) {
    BinaryImage img(32, 24);
    for (auto& p : img.px) p = ink(rng);
    for (int row = 0; row < img.h; row += 2)
      for (int col = 0; col < img.w; col += 2) {
        const int n = oracle::window_ink_count(img, col, row);
        // tau = n*255/25 inside [41, 82] <=> n in {5..8}
        const bool expect_fork = n >= 5 && n <= 8;
        CHECK((classify_pixel(img, col, row, cfg) == PixelClass::fork) == expect_fork);
      }
  }
}

TEST_CASE("raw mode cannot fire on a 5x5 window") {
  PerceptionConfig cfg;
  cfg.tau_mode = PerceptionConfig::TauMode::raw;  // thresholds exceed 25
  BinaryImage img(16, 16);
  for (auto& p : img.px) p = 1;
  for (int row = 0; row < 16; ++row)
    for (int col = 0; col < 16; ++col)
      CHECK(classify_pixel(img, col, row, cfg) == PixelClass::normal);
}

TEST_CASE("region growth walks a straight band to the top") {
  const auto img = band_image(128, 72, 60, 67);
  const auto b = region_boundaries(img);
  REQUIRE(b.has_value());
  REQUIRE(b->size() == 72);
  CHECK(b->rows.front() == 71);
  CHECK(b->rows.back() == 0);
  for (std::size_t i = 0; i < b->size(); ++i) {
    CHECK(b->left[i] == 60);
    CHECK(b->right[i] == 67);
  }
  const auto mid = centerline(*b);
  for (int c : mid) CHECK(c == 64);
}

TEST_CASE("region growth follows a drifting band exactly") {
  BinaryImage img(128, 72);
  auto lcol = [](int r) { return 20 + (71 - r) * (71 - r) / 150; };
  for (int r = 0; r < 72; ++r)
    for (int c = lcol(r); c < lcol(r) + 4; ++c) img.set(c, r, 1);
  const auto b = region_boundaries(img);
  REQUIRE(b.has_value());
  REQUIRE(b->size() == 72);
  for (std::size_t i = 0; i < b->size(); ++i) {
    const int r = b->rows[i];
    CHECK(b->left[i] == lcol(r));
    CHECK(b->right[i] == lcol(r) + 3);
  }
}

TEST_CASE("unconnected blobs are never absorbed") {
  auto img = band_image(128, 72, 60, 67);
  for (int r = 30; r <= 35; ++r)
    for (int c = 100; c <= 110; ++c) img.set(c, r, 1);
  const auto b = region_boundaries(img);
  REQUIRE(b.has_value());
  for (std::size_t i = 0; i < b->size(); ++i) {
    CHECK(b->left[i] == 60);
    CHECK(b->right[i] == 67);
  }
}

TEST_CASE("seeding requires ink near the bottom and prefers the centre") {
  SUBCASE("blank image") { CHECK_FALSE(region_boundaries(BinaryImage(128, 72)).has_value()); }
  SUBCASE("ink only far from the robot") {
    BinaryImage img(128, 72);
    for (int r = 0; r <= 50; ++r) img.set(64, r, 1);
    CHECK_FALSE(region_boundaries(img).has_value());
  }
  SUBCASE("two candidate spans") {
    BinaryImage img(128, 72);
    for (int r = 64; r < 72; ++r)
      for (int c : {10, 11, 12, 13, 14, 15, 16, 17, 60, 61, 62, 63, 64, 65, 66, 67})
        img.set(c, r, 1);
    const auto b = region_boundaries(img);
    REQUIRE(b.has_value());
    CHECK(b->left.front() == 60);  // centre span wins over the offset one
    CHECK(b->right.front() == 67);
  }
}

TEST_CASE("a thin crossing bar is bridged through") {
  auto img = band_image(128, 72, 60, 67);
  for (int r = 40; r <= 41; ++r)
    for (int c = 0; c < 128; ++c) img.set(c, r, 1);

  // without fork handling the boundaries balloon across the bar
  const auto raw = region_boundaries(img);
  REQUIRE(raw.has_value());
  CHECK(raw->left[71 - 41] == 0);
  CHECK(raw->right[71 - 41] == 127);

  PerceptionConfig cfg;
  const auto b = extract_line(img, cfg);
  REQUIRE(b.has_value());
  REQUIRE(b->size() == 72);
  int bridged = 0;
  for (std::size_t i = 0; i < b->size(); ++i) {
    CHECK(b->left[i] == 60);
    CHECK(b->right[i] == 67);
    bridged += b->bridged[i];
  }
  CHECK(bridged == 2);  // exactly the two bar rows are synthesised
  CHECK(b->bridged[71 - 40] == 1);
  CHECK(b->bridged[71 - 41] == 1);
}

TEST_CASE("a thick crossing bar is bridged by the span balloon") {
  // the centre pixel stays solid ink across the bar, so only the width
  // balloon can trigger the bridge here
  auto img = band_image(128, 72, 60, 67);
  for (int r = 36; r <= 43; ++r)
    for (int c = 0; c < 128; ++c) img.set(c, r, 1);
  PerceptionConfig cfg;
  const auto b = extract_line(img, cfg);
  REQUIRE(b.has_value());
  REQUIRE(b->size() == 72);
  int bridged = 0;
  for (std::size_t i = 0; i < b->size(); ++i) {
    CHECK(b->left[i] == 60);
    CHECK(b->right[i] == 67);
    bridged += b->bridged[i];
  }
  CHECK(bridged == 8);  // exactly the bar rows are synthesised
  for (int r = 36; r <= 43; ++r) CHECK(b->bridged[71 - r] == 1);
}

TEST_CASE("five points sample the expected rows and scale to [-1,1]") {
  const auto img = band_image(128, 72, 60, 67);
  const auto fp = five_points(img, {});
  REQUIRE(fp.has_value());
  const int rows[5] = {0, 18, 36, 53, 71};
  for (int k = 0; k < 5; ++k) {
    CHECK(fp->row[k] == rows[k]);
    CHECK(fp->col[k] == 64);
    CHECK(fp->x[k] == doctest::Approx(2.0 * 64 / 127 - 1.0).epsilon(1e-12));
    CHECK(fp->y[k] == doctest::Approx(2.0 * rows[k] / 71.0 - 1.0).epsilon(1e-12));
  }
  CHECK(fp->y[0] == -1.0);
  CHECK(fp->y[4] == 1.0);
  CHECK_FALSE(five_points(BinaryImage(128, 72), {}).has_value());
}

TEST_CASE("mirrored frames give negated lateral offsets") {
  BinaryImage img(128, 72);
  auto lcol = [](int r) { return 40 + (71 - r) * (71 - r) / 150; };
  for (int r = 0; r < 72; ++r)
    for (int c = lcol(r); c < lcol(r) + 4; ++c) img.set(c, r, 1);
  const auto fp = five_points(img, {});
  const auto fm = five_points(mirror_horizontal(img), {});
  REQUIRE(fp.has_value());
  REQUIRE(fm.has_value());
  for (int k = 0; k < 5; ++k) {
    // midpoint rounding can differ by one column between the frames
    CHECK(std::abs(fm->x[k] + fp->x[k]) <= 2.0 / 127 + 1e-12);
    CHECK(fm->y[k] == fp->y[k]);
  }
}

TEST_CASE("curvature error is near zero when turn rate matches the bend") {
  CurvatureEstimator est;
  const auto img = top_arc_image(2.0, true);
  const double e = est.update(img, 0.3, 0.3 / 2.0);
  CHECK(est.last_valid());
  CHECK(est.line_curvature() == doctest::Approx(0.5).epsilon(0.15));
  CHECK(std::abs(e) < 0.1);
}

TEST_CASE("curvature error signs follow the bend direction") {
  CurvatureEstimator left, right;
  const double el = left.update(top_arc_image(2.0, true), 0.3, 0.0);
  const double er = right.update(top_arc_image(2.0, false), 0.3, 0.0);
  // straight driving on a left bend: commanded curvature too small
  CHECK(el == doctest::Approx(-0.5).epsilon(0.2));
  CHECK(er == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("blank views hold the previous estimate") {
  CurvatureEstimator est;
  CHECK(est.update(BinaryImage(72, 72), 0.3, 0.0) == 0.0);
  CHECK_FALSE(est.last_valid());
  const double e = est.update(top_arc_image(2.0, true), 0.3, 0.0);
  CHECK(est.last_valid());
  CHECK(est.update(BinaryImage(72, 72), 0.3, 0.0) == e);
  CHECK_FALSE(est.last_valid());
  est.reset();
  CHECK(est.update(BinaryImage(72, 72), 0.3, 0.0) == 0.0);
}

TEST_CASE("slow commands use the velocity floor and the clamp") {
  CurvatureEstimator est;
  BinaryImage img(72, 72);
  for (int v = 0; v < 72; ++v)
    for (int u = 34; u <= 37; ++u) img.set(u, v, 1);  // straight ahead
  // c_r = 2 / max(0.001, 0.05) = 40, clamped to the +-5 band
  CHECK(est.update(img, 0.001, 2.0) == 5.0);
  CHECK(est.update(img, 0.001, -2.0) == -5.0);
}

TEST_CASE("state vector ordering and scaling") {
  FivePoints fp;
  for (int k = 0; k < 5; ++k) {
    fp.x[k] = 0.1 * (k + 1);
    fp.y[k] = -0.1 * (k + 1);
  }
  const auto s = build_state(fp, 2.5, 0.25, -1.0, {});
  for (int k = 0; k < 5; ++k) {
    CHECK(s[2 * k] == fp.x[k]);
    CHECK(s[2 * k + 1] == fp.y[k]);
  }
  CHECK(s[10] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s[11] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s[12] == doctest::Approx(-0.5).epsilon(1e-12));
  // saturation
  const auto t = build_state(fp, 99.0, 9.0, -9.0, {});
  CHECK(t[10] == 1.0);
  CHECK(t[11] == 1.0);
  CHECK(t[12] == -1.0);
}

}  // TEST_SUITE
