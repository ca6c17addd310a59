#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sacpid/geom.hpp"
#include "sacpid/image.hpp"

namespace sacpid::track {

struct Segment {
  enum class Kind { line, arc, cubic };
  Kind kind{Kind::line};
  Vec2 a{}, b{};        // line endpoints / cubic endpoints
  Vec2 c0{}, c1{};      // cubic control points
  Vec2 center{};        // arc
  double radius{};
  double ang0{}, ang1{};  // arc sweep, CCW when ang1 > ang0

  static Segment make_line(Vec2 a, Vec2 b);
  static Segment make_arc(Vec2 center, double radius, double ang0, double ang1);
  static Segment make_cubic(Vec2 a, Vec2 c0, Vec2 c1, Vec2 b);

  Vec2 point(double t) const;  // t in [0,1]
  Vec2 start() const { return point(0.0); }
  Vec2 end() const { return point(1.0); }
  double length() const;  // analytic for line/arc, quadrature for cubic
};

// A branch painted onto the floor in addition to the main path.  The chain
// starts exactly at the main-path point at attach_s and may re-cross the
// main path further along (which is how X-crossings arise).
struct Fork {
  double attach_s{};
  std::vector<Segment> segments;
};

struct TrackSpec {
  double width{0.04};
  std::vector<Segment> segments;  // main path, continuous chain
  std::vector<Fork> forks;
  Pose start_pose{};
  double goal_s{};  // total main-path arc length
};

enum class BuiltinKind { circle, fork_circle, complex_loop, test_loop };

std::optional<BuiltinKind> builtin_from_name(const std::string& name);
const char* builtin_name(BuiltinKind kind);

// scale > 0 sets the overall size (circle radius for the circle layouts).
TrackSpec make_builtin(BuiltinKind kind, double scale);

// Throws std::invalid_argument when an invariant is broken.
void validate(const TrackSpec& spec);

// Dense polyline over a segment chain, arc-length indexed.
class Polyline {
 public:
  Polyline() = default;
  Polyline(const std::vector<Segment>& chain, double step);
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  void nearest(Vec2 p, double* s, double* d) const;
  const std::vector<Vec2>& points() const { return pts_; }

 private:
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

class TrackGeometry {
 public:
  explicit TrackGeometry(const TrackSpec& spec, double step = 0.005);
  const TrackSpec& spec() const { return spec_; }
  const Polyline& main() const { return main_; }
  const std::vector<Polyline>& fork_lines() const { return forks_; }
  // Arc length of the nearest main-path point, or nullopt when the query
  // point is more than 5 track widths away from the main path.
  std::optional<double> progress(Vec2 position) const;

 private:
  TrackSpec spec_;
  Polyline main_;
  std::vector<Polyline> forks_;
};

struct TrackRaster {
  double cell_size{};
  Vec2 origin{};  // world position of the lower-left corner of cell (0,0)
  int nx{}, ny{};
  std::vector<std::uint8_t> grid;  // row-major by y index

  bool ink_cell(int ix, int iy) const {
    return grid[static_cast<std::size_t>(iy) * nx + ix] != 0;
  }
  bool ink_at(Vec2 world) const;
  Vec2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
  }
  std::size_t ink_count() const;
};

// Cells whose centers lie within width/2 of any painted path (ties included).
// Bounds cover all paths plus a 0.5 m margin.
TrackRaster rasterize(const TrackSpec& spec, double cell_size);

// North-up picture of the raster (row 0 = largest y), ink = 1.
percep::BinaryImage raster_image(const TrackRaster& raster);

TrackSpec load_track(const std::string& path);
void save_track(const TrackSpec& spec, const std::string& path);

}  // namespace sacpid::track
