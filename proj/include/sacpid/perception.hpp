#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sacpid/image.hpp"

namespace sacpid::percep {

struct PerceptionConfig {
  // Fork thresholds compare the 5x5 window statistic tau against
  // [tau1, tau2].  In scaled mode the ink count is mapped to 0..255
  // (tau = count * 255 / 25); raw mode compares the bare count.
  enum class TauMode { scaled, raw };
  TauMode tau_mode = TauMode::scaled;
  double tau1 = 41.0;
  double tau2 = 82.0;

  int bridge_fit_rows = 12;  // trailing entries used for the gap fit
  int bridge_max_gap = 25;   // rows a bridge may span
  int bridge_tol = 3;        // px tolerance when re-acquiring the line

  // A crossing keeps the centre pixel solid (tau never drops into the fork
  // band), so a sudden span balloon also triggers bridging: width beyond
  // balloon_factor x the recent median and wider by balloon_slack px.
  double balloon_factor = 1.8;
  int balloon_slack = 4;
};

enum class PixelClass { normal, fork };

PixelClass classify_pixel(const BinaryImage& img, int col, int row,
                          const PerceptionConfig& cfg);

// Row-wise left/right ink boundaries of the line region, recorded bottom-up
// in growth order.  `bridged` flags entries synthesised across a fork gap.
struct Boundaries {
  std::vector<int> rows;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<std::uint8_t> bridged;
  std::size_t size() const { return rows.size(); }
};

// Raw region growth from the bottom seed, no fork handling.
std::optional<Boundaries> region_boundaries(const BinaryImage& img);

// Region growth plus fork-gap bridging; the main extraction entry point.
std::optional<Boundaries> extract_line(const BinaryImage& img,
                                       const PerceptionConfig& cfg);

// Midpoint column per boundary entry, rounding half toward larger columns.
std::vector<int> centerline(const Boundaries& b);

struct FivePoints {
  std::array<int, 5> row{};
  std::array<int, 5> col{};
  std::array<double, 5> x{};  // 2*col/(w-1) - 1
  std::array<double, 5> y{};  // 2*row/(h-1) - 1
};

// Five centerline samples at rows {top, 1/4, 1/2, 3/4, bottom} of the grown
// region; point 1 is the farthest, point 5 the nearest to the robot.
std::optional<FivePoints> five_points(const BinaryImage& img,
                                      const PerceptionConfig& cfg);

// Curvature tracking error e_c = c_r - c_l from the downward view.
class CurvatureEstimator {
 public:
  struct Params {
    double m_per_px = 0.01;
    double v_floor = 0.05;
    double e_c_max = 5.0;
    PerceptionConfig perception{};
  };

  CurvatureEstimator() : CurvatureEstimator(Params{}) {}
  explicit CurvatureEstimator(Params p) : params_(p) {}
  void reset();
  // v and omega are the currently commanded velocities; a blank or
  // unusable view holds the previous estimate.
  double update(const BinaryImage& top, double v, double omega);
  double line_curvature() const { return c_l_; }
  bool last_valid() const { return valid_; }

 private:
  Params params_;
  double last_{0.0};
  double c_l_{0.0};
  bool valid_{false};
};

struct StateScale {
  double e_c_max = 5.0;
  double v_lo = 0.0, v_hi = 0.5;
  double w_max = 2.0;
};

// 13-entry controller state:
// [x1,y1,...,x5,y5, e_c, v, w], every entry scaled into [-1, 1].
std::array<double, 13> build_state(const FivePoints& fp, double e_c, double v,
                                   double w, const StateScale& sc = {});

}  // namespace sacpid::percep
