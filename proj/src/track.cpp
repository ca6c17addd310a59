#include "sacpid/track.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sacpid::track {

namespace {

Vec2 bezier_deriv(const Segment& s, double t) {
  const double u = 1.0 - t;
  const Vec2 d0 = s.c0 - s.a, d1 = s.c1 - s.c0, d2 = s.b - s.c1;
  return 3.0 * u * u * d0 + 6.0 * u * t * d1 + 3.0 * t * t * d2;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

double cubic_partial_length(const Segment& s, double t) {
  return integrate([&](double x) { return norm(bezier_deriv(s, x)); }, 0.0, t, 1e-11);
}

double partial_length(const Segment& s, double t) {
  switch (s.kind) {
    case Segment::Kind::line:
      return t * dist(s.a, s.b);
    case Segment::Kind::arc:
      return t * s.radius * std::abs(s.ang1 - s.ang0);
    case Segment::Kind::cubic:
      return cubic_partial_length(s, t);
  }
  return 0.0;
}

// Parameter at a given arc length along one segment.
double t_at_length(const Segment& s, double target) {
  const double total = s.length();
  if (target <= 0.0) return 0.0;
  if (target >= total) return 1.0;
  if (s.kind != Segment::Kind::cubic) return target / total;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cubic_partial_length(s, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vec2 chain_point(const std::vector<Segment>& chain, double s) {
  double acc = 0.0;
  for (const auto& seg : chain) {
    const double len = seg.length();
    if (s <= acc + len || &seg == &chain.back())
      return seg.point(t_at_length(seg, s - acc));
    acc += len;
  }
  return chain.empty() ? Vec2{} : chain.back().end();
}

Vec2 rot(Vec2 v, double ang) {
  const double c = std::cos(ang), s = std::sin(ang);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

Segment Segment::make_line(Vec2 a, Vec2 b) {
  Segment s;
  s.kind = Kind::line;
  s.a = a;
  s.b = b;
  return s;
}

Segment Segment::make_arc(Vec2 center, double radius, double ang0, double ang1) {
  Segment s;
  s.kind = Kind::arc;
  s.center = center;
  s.radius = radius;
  s.ang0 = ang0;
  s.ang1 = ang1;
  return s;
}

Segment Segment::make_cubic(Vec2 a, Vec2 c0, Vec2 c1, Vec2 b) {
  Segment s;
  s.kind = Kind::cubic;
  s.a = a;
  s.c0 = c0;
  s.c1 = c1;
  s.b = b;
  return s;
}

Vec2 Segment::point(double t) const {
  switch (kind) {
    case Kind::line:
      return a + t * (b - a);
    case Kind::arc: {
      const double ang = ang0 + t * (ang1 - ang0);
      return center + radius * Vec2{std::cos(ang), std::sin(ang)};
    }
    case Kind::cubic: {
      const double u = 1.0 - t;
      return (u * u * u) * a + (3.0 * u * u * t) * c0 + (3.0 * u * t * t) * c1 +
             (t * t * t) * b;
    }
  }
  return {};
}

double Segment::length() const { return partial_length(*this, 1.0); }

std::optional<BuiltinKind> builtin_from_name(const std::string& name) {
  if (name == "circle") return BuiltinKind::circle;
  if (name == "fork_circle") return BuiltinKind::fork_circle;
  if (name == "complex") return BuiltinKind::complex_loop;
  if (name == "test") return BuiltinKind::test_loop;
  return std::nullopt;
}

const char* builtin_name(BuiltinKind kind) {
  switch (kind) {
    case BuiltinKind::circle:
      return "circle";
    case BuiltinKind::fork_circle:
      return "fork_circle";
    case BuiltinKind::complex_loop:
      return "complex";
    case BuiltinKind::test_loop:
      return "test";
  }
  return "?";
}

TrackSpec make_builtin(BuiltinKind kind, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("track scale must be positive");
  TrackSpec spec;
  spec.width = 0.04;
  switch (kind) {
    case BuiltinKind::circle:
    case BuiltinKind::fork_circle: {
      const double R = scale;
      spec.segments = {Segment::make_arc({0.0, R}, R, -M_PI_2, 3.0 * M_PI_2)};
      spec.start_pose = {0.0, 0.0, 0.0};
      spec.goal_s = 2.0 * M_PI * R;
      if (kind == BuiltinKind::fork_circle) {
        // Diameter branch: perpendicular T at the attach point, perpendicular
        // X-crossing at the antipode, with a stub past the far rim.
        const double ang = -M_PI_2 + 1.2;
        const Vec2 c{0.0, R};
        const Vec2 radial{std::cos(ang), std::sin(ang)};
        const Vec2 A = c + R * radial;
        const Vec2 ext = c + (-1.12 * R) * radial;
        spec.forks.push_back({1.2 * R, {Segment::make_line(A, ext)}});
      }
      break;
    }
    case BuiltinKind::complex_loop: {
      const double R = 0.5 * scale, L = 1.2 * scale;
      auto s_curve = Segment::make_cubic({L, 2.0 * R}, {2.0 * L / 3.0, 2.25 * R},
                                         {L / 3.0, 1.75 * R}, {0.0, 2.0 * R});
      spec.segments = {
          Segment::make_line({0.0, 0.0}, {L, 0.0}),
          Segment::make_arc({L, R}, R, -M_PI_2, M_PI_2),
          s_curve,
          Segment::make_arc({0.0, R}, R, M_PI_2, 3.0 * M_PI_2),
      };
      spec.start_pose = {0.0, 0.0, 0.0};
      spec.goal_s = L + 2.0 * M_PI * R + s_curve.length();
      // X-crossing halfway down the first straight.
      {
        const Vec2 P{0.5 * L, 0.0};
        spec.forks.push_back({0.5 * L, {Segment::make_line(P, P + Vec2{0.0, 0.6 * R})}});
        spec.forks.push_back({0.5 * L, {Segment::make_line(P, P - Vec2{0.0, 0.4 * R})}});
      }
      // Oblique branch near the end of the straight.
      {
        const Vec2 P{0.85 * L, 0.0};
        const Vec2 d = rot({1.0, 0.0}, 40.0 * M_PI / 180.0);
        spec.forks.push_back({0.85 * L, {Segment::make_line(P, P + (0.7 * R) * d)}});
      }
      // Oblique crossing on the right-hand arc.
      {
        const double s_arc = L + 0.5 * M_PI * R;  // middle of the arc
        const Vec2 P = chain_point(spec.segments, s_arc);
        const Vec2 d = rot({1.0, 0.0}, 30.0 * M_PI / 180.0);
        spec.forks.push_back({s_arc, {Segment::make_line(P, P + (0.5 * R) * d)}});
        spec.forks.push_back({s_arc, {Segment::make_line(P, P - (0.35 * R) * d)}});
      }
      break;
    }
    case BuiltinKind::test_loop: {
      const double R = 0.65 * scale, r = 0.45 * scale;
      spec.segments = {
          Segment::make_arc({0.0, R}, R, -M_PI_2, 0.0),
          Segment::make_arc({R - r, R}, r, 0.0, M_PI_2),
          Segment::make_arc({R - r, r}, R, M_PI_2, M_PI),
          Segment::make_arc({0.0, r}, r, M_PI, 3.0 * M_PI_2),
      };
      spec.start_pose = {0.0, 0.0, 0.0};
      spec.goal_s = M_PI * (R + r);
      // One oblique crossing on the first bend.
      const double s_f = 0.6 * R * M_PI_2;
      const Vec2 P = chain_point(spec.segments, s_f);
      const double tang = -M_PI_2 + s_f / R;  // arc parameter angle
      const Vec2 T{-std::sin(tang), std::cos(tang)};
      const Vec2 d = rot(T, 50.0 * M_PI / 180.0);
      spec.forks.push_back({s_f, {Segment::make_line(P, P + (0.5 * r) * d)}});
      spec.forks.push_back({s_f, {Segment::make_line(P, P - (0.35 * r) * d)}});
      break;
    }
  }
  validate(spec);
  return spec;
}

void validate(const TrackSpec& spec) {
  if (!(spec.width > 0.0) || !std::isfinite(spec.width))
    throw std::invalid_argument("track width must be positive");
  if (spec.segments.empty()) throw std::invalid_argument("track has no segments");
  auto check_chain = [](const std::vector<Segment>& chain, const char* what) {
    double len = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const auto& s = chain[i];
      if (s.kind == Segment::Kind::arc && !(s.radius > 0.0))
        throw std::invalid_argument(std::string(what) + ": arc radius must be positive");
      const double l = s.length();
      if (!(l > 0.0)) throw std::invalid_argument(std::string(what) + ": degenerate segment");
      len += l;
      if (i + 1 < chain.size() && dist(s.end(), chain[i + 1].start()) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": chain is not continuous");
    }
    return len;
  };
  const double main_len = check_chain(spec.segments, "main path");
  if (std::abs(main_len - spec.goal_s) > 1e-6)
    throw std::invalid_argument("goal_s does not match main-path length");
  for (const auto& f : spec.forks) {
    if (f.attach_s < 0.0 || f.attach_s > spec.goal_s)
      throw std::invalid_argument("fork attaches outside the main path");
    if (f.segments.empty()) throw std::invalid_argument("fork has no segments");
    check_chain(f.segments, "fork");
    if (dist(f.segments.front().start(), chain_point(spec.segments, f.attach_s)) > 1e-9)
      throw std::invalid_argument("fork does not start on the main path");
  }
  // Start pose must sit on the painted main path.
  double best = 1e300;
  for (const auto& seg : spec.segments) {
    const int n = std::max(2, static_cast<int>(std::ceil(seg.length() / (0.25 * spec.width))));
    Vec2 prev = seg.point(0.0);
    for (int i = 1; i <= n; ++i) {
      const Vec2 cur = seg.point(static_cast<double>(i) / n);
      best = std::min(best, point_segment_dist({spec.start_pose.x, spec.start_pose.y}, prev, cur));
      prev = cur;
    }
  }
  if (best > 0.5 * spec.width + 1e-9)
    throw std::invalid_argument("start pose is off the main path");
}

Polyline::Polyline(const std::vector<Segment>& chain, double step) {
  pts_.clear();
  cum_.clear();
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const auto& seg = chain[k];
    const int n = std::max(1, static_cast<int>(std::ceil(seg.length() / step)));
    for (int i = (k == 0 ? 0 : 1); i <= n; ++i)
      pts_.push_back(seg.point(static_cast<double>(i) / n));
  }
  cum_.resize(pts_.size(), 0.0);
  for (std::size_t i = 1; i < pts_.size(); ++i)
    cum_[i] = cum_[i - 1] + dist(pts_[i - 1], pts_[i]);
}

Vec2 Polyline::point_at(double s) const {
  if (pts_.empty()) return {};
  s = std::clamp(s, 0.0, length());
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  if (it == cum_.begin()) return pts_.front();
  if (it == cum_.end()) return pts_.back();
  const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
  const double seg = cum_[i] - cum_[i - 1];
  const double t = seg > 0.0 ? (s - cum_[i - 1]) / seg : 0.0;
  return pts_[i - 1] + t * (pts_[i] - pts_[i - 1]);
}

double Polyline::heading_at(double s) const {
  if (pts_.size() < 2) return 0.0;
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  std::size_t i = it == cum_.end() ? cum_.size() - 1
                                   : std::max<std::size_t>(1, it - cum_.begin());
  const Vec2 d = pts_[i] - pts_[i - 1];
  return std::atan2(d.y, d.x);
}

void Polyline::nearest(Vec2 p, double* s_out, double* d_out) const {
  double best_d = 1e300, best_s = 0.0;
  for (std::size_t i = 1; i < pts_.size(); ++i) {
    const Vec2 a = pts_[i - 1], b = pts_[i];
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const double d = dist(p, a + t * ab);
    if (d < best_d) {
      best_d = d;
      best_s = cum_[i - 1] + t * (cum_[i] - cum_[i - 1]);
    }
  }
  if (s_out) *s_out = best_s;
  if (d_out) *d_out = best_d;
}

TrackGeometry::TrackGeometry(const TrackSpec& spec, double step) : spec_(spec) {
  validate(spec_);
  main_ = Polyline(spec_.segments, step);
  for (const auto& f : spec_.forks) forks_.emplace_back(f.segments, step);
}

std::optional<double> TrackGeometry::progress(Vec2 position) const {
  double s = 0.0, d = 0.0;
  main_.nearest(position, &s, &d);
  if (d > 5.0 * spec_.width) return std::nullopt;
  return s;
}

bool TrackRaster::ink_at(Vec2 world) const {
  const int ix = static_cast<int>(std::floor((world.x - origin.x) / cell_size));
  const int iy = static_cast<int>(std::floor((world.y - origin.y) / cell_size));
  if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return false;
  return ink_cell(ix, iy);
}

std::size_t TrackRaster::ink_count() const {
  std::size_t n = 0;
  for (auto v : grid) n += v;
  return n;
}

TrackRaster rasterize(const TrackSpec& spec, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size))
    throw std::invalid_argument("cell size must be positive");
  validate(spec);
  const double step = 0.5 * cell_size;
  std::vector<Polyline> lines;
  lines.emplace_back(spec.segments, step);
  for (const auto& f : spec.forks) lines.emplace_back(f.segments, step);

  const double margin = 0.5 * spec.width + 0.5;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& pl : lines)
    for (const auto& p : pl.points()) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  TrackRaster r;
  r.cell_size = cell_size;
  r.origin = {x0 - margin, y0 - margin};
  r.nx = static_cast<int>(std::ceil((x1 - x0 + 2.0 * margin) / cell_size));
  r.ny = static_cast<int>(std::ceil((y1 - y0 + 2.0 * margin) / cell_size));
  r.grid.assign(static_cast<std::size_t>(r.nx) * r.ny, 0);

  const double w2 = 0.5 * spec.width;
  for (const auto& pl : lines) {
    const auto& pts = pl.points();
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const Vec2 a = pts[i - 1], b = pts[i];
      const double bx0 = std::min(a.x, b.x) - w2 - cell_size;
      const double bx1 = std::max(a.x, b.x) + w2 + cell_size;
      const double by0 = std::min(a.y, b.y) - w2 - cell_size;
      const double by1 = std::max(a.y, b.y) + w2 + cell_size;
      const int ix0 = std::max(0, static_cast<int>(std::floor((bx0 - r.origin.x) / cell_size)));
      const int ix1 = std::min(r.nx - 1, static_cast<int>(std::floor((bx1 - r.origin.x) / cell_size)));
      const int iy0 = std::max(0, static_cast<int>(std::floor((by0 - r.origin.y) / cell_size)));
      const int iy1 = std::min(r.ny - 1, static_cast<int>(std::floor((by1 - r.origin.y) / cell_size)));
      for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix)
          if (point_segment_dist(r.cell_center(ix, iy), a, b) <= w2)
            r.grid[static_cast<std::size_t>(iy) * r.nx + ix] = 1;
    }
  }
  return r;
}

percep::BinaryImage raster_image(const TrackRaster& raster) {
  percep::BinaryImage img(raster.nx, raster.ny);
  for (int iy = 0; iy < raster.ny; ++iy)
    for (int ix = 0; ix < raster.nx; ++ix)
      img.set(ix, raster.ny - 1 - iy, raster.ink_cell(ix, iy));
  return img;
}

namespace {

std::string dstr(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string seg_json(const Segment& s) {
  std::ostringstream o;
  switch (s.kind) {
    case Segment::Kind::line:
      o << R"({"kind": "line", "a": [)" << dstr(s.a.x) << ", " << dstr(s.a.y)
        << R"(], "b": [)" << dstr(s.b.x) << ", " << dstr(s.b.y) << "]}";
      break;
    case Segment::Kind::arc:
      o << R"({"kind": "arc", "center": [)" << dstr(s.center.x) << ", "
        << dstr(s.center.y) << R"(], "radius": )" << dstr(s.radius)
        << R"(, "ang0": )" << dstr(s.ang0) << R"(, "ang1": )" << dstr(s.ang1) << "}";
      break;
    case Segment::Kind::cubic:
      o << R"({"kind": "cubic", "a": [)" << dstr(s.a.x) << ", " << dstr(s.a.y)
        << R"(], "c0": [)" << dstr(s.c0.x) << ", " << dstr(s.c0.y)
        << R"(], "c1": [)" << dstr(s.c1.x) << ", " << dstr(s.c1.y)
        << R"(], "b": [)" << dstr(s.b.x) << ", " << dstr(s.b.y) << "]}";
      break;
  }
  return o.str();
}

Vec2 read_vec(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw std::invalid_argument("track file: bad point");
  return {v[0].get<double>(), v[1].get<double>()};
}

Segment read_seg(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "line") return Segment::make_line(read_vec(j, "a"), read_vec(j, "b"));
  if (kind == "arc")
    return Segment::make_arc(read_vec(j, "center"), j.at("radius").get<double>(),
                             j.at("ang0").get<double>(), j.at("ang1").get<double>());
  if (kind == "cubic")
    return Segment::make_cubic(read_vec(j, "a"), read_vec(j, "c0"),
                               read_vec(j, "c1"), read_vec(j, "b"));
  throw std::invalid_argument("track file: unknown segment kind '" + kind + "'");
}

}  // namespace

TrackSpec load_track(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open track file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("track file parse error: " + std::string(e.what()));
  }
  try {
    TrackSpec spec;
    spec.width = j.at("width_m").get<double>();
    for (const auto& s : j.at("segments")) spec.segments.push_back(read_seg(s));
    if (j.contains("forks"))
      for (const auto& fj : j.at("forks")) {
        Fork fork;
        fork.attach_s = fj.at("attach_s").get<double>();
        for (const auto& s : fj.at("segments")) fork.segments.push_back(read_seg(s));
        spec.forks.push_back(std::move(fork));
      }
    const auto& sp = j.at("start_pose");
    spec.start_pose = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
    spec.goal_s = j.at("goal_s").get<double>();
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("track file schema error: " + std::string(e.what()));
  }
}

void save_track(const TrackSpec& spec, const std::string& path) {
  validate(spec);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write track file: " + path);
  f << "{\n  \"version\": 1,\n  \"width_m\": " << dstr(spec.width) << ",\n";
  f << "  \"segments\": [\n";
  for (std::size_t i = 0; i < spec.segments.size(); ++i)
    f << "    " << seg_json(spec.segments[i])
      << (i + 1 < spec.segments.size() ? ",\n" : "\n");
  f << "  ],\n  \"forks\": [\n";
  for (std::size_t k = 0; k < spec.forks.size(); ++k) {
    const auto& fork = spec.forks[k];
    f << "    {\"attach_s\": " << dstr(fork.attach_s) << ", \"segments\": [\n";
    for (std::size_t i = 0; i < fork.segments.size(); ++i)
      f << "      " << seg_json(fork.segments[i])
        << (i + 1 < fork.segments.size() ? ",\n" : "\n");
    f << "    ]}" << (k + 1 < spec.forks.size() ? ",\n" : "\n");
  }
  f << "  ],\n  \"start_pose\": [" << dstr(spec.start_pose.x) << ", "
    << dstr(spec.start_pose.y) << ", " << dstr(spec.start_pose.heading) << "],\n";
  f << "  \"goal_s\": " << dstr(spec.goal_s) << "\n}\n";
}

}  // namespace sacpid::track
