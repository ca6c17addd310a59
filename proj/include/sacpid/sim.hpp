#pragma once
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "sacpid/geom.hpp"
#include "sacpid/image.hpp"
#include "sacpid/track.hpp"

namespace sacpid::sim {

struct CameraConfig {
  // Forward camera: perspective, mounted at the robot origin looking along
  // +x, tilted down.  Bottom image rows are nearest the robot.  Columns
  // increase toward the robot's left, so a line on the positive-omega side
  // reads as positive image x: the x4 -> omega loop then has negative
  // feedback under non-negative gains, matching the configured gain ranges.
  int front_w = 128;
  int front_h = 72;
  double height = 0.25;                   // m above the floor
  double tilt = 30.0 * M_PI / 180.0;      // downward from horizontal
  double hfov = 60.0 * M_PI / 180.0;
  // Downward view: orthographic square window starting at the robot origin
  // and extending forward.
  int top_w = 72;
  int top_h = 72;
  double top_window = 0.72;  // m
};

enum class Terminal { none, goal, out_of_line };

struct WorldConfig {
  track::TrackSpec track;
  CameraConfig camera{};
  double dt = 0.1;
  int lag_steps = 1;          // command issued at t is applied at t + lag
  double raster_cell = 0.005;
  double start_jitter = 0.25;  // lateral jitter amplitude, in track widths
  double goal_tol_widths = 2.0;
  int min_goal_steps = 10;     // progress guard before goal can fire
};

struct StepOutcome {
  Pose pose;
  Terminal terminal{Terminal::none};
  double applied_v{};
  double applied_w{};
  double progress{};  // running-max unwrapped arc length since reset
};

class World {
 public:
  explicit World(WorldConfig cfg);

  void reset(std::uint64_t seed);
  StepOutcome step(double v_cmd, double w_cmd);

  const Pose& pose() const { return pose_; }
  Terminal terminal() const { return terminal_; }
  int steps() const { return steps_; }
  double progress() const { return progress_max_; }
  double dt() const { return cfg_.dt; }
  const WorldConfig& config() const { return cfg_; }
  const track::TrackGeometry& geometry() const { return geom_; }

  // Views rendered after the latest reset/step.
  const percep::BinaryImage& front() const { return front_; }
  const percep::BinaryImage& top() const { return top_; }

 private:
  void render();
  void update_progress();

  WorldConfig cfg_;
  track::TrackGeometry geom_;
  track::TrackRaster raster_;
  bool closed_loop_{};
  double start_s_{};  // arc position of the nominal start pose

  // per-pixel ground points in the robot frame, precomputed once
  struct GroundPt {
    Vec2 p;
    bool valid;
  };
  std::vector<GroundPt> front_ground_;
  std::vector<Vec2> top_ground_;

  Pose pose_{};
  std::deque<std::pair<double, double>> lag_;
  Terminal terminal_{Terminal::none};
  int steps_{};
  double prev_raw_s_{};
  double unwrapped_{};
  double progress_max_{};
  percep::BinaryImage front_;
  percep::BinaryImage top_;
};

}  // namespace sacpid::sim
