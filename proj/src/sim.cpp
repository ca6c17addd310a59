#include "sacpid/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace sacpid::sim {

World::World(WorldConfig cfg)
    : cfg_(std::move(cfg)),
      geom_(cfg_.track),
      raster_(track::rasterize(cfg_.track, cfg_.raster_cell)) {
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (cfg_.lag_steps < 0) throw std::invalid_argument("lag must be >= 0");
  const auto& chain = cfg_.track.segments;
  closed_loop_ = dist(chain.back().end(), chain.front().start()) <= 1e-9;
  start_s_ = geom_.progress({cfg_.track.start_pose.x, cfg_.track.start_pose.y})
                 .value_or(0.0);

  // Forward camera: cast each pixel ray onto the floor once; only the pose
  // transform changes per frame.
  const auto& cam = cfg_.camera;
  const double fx = (cam.front_w / 2.0) / std::tan(cam.hfov / 2.0);
  const double cx = (cam.front_w - 1) / 2.0, cy = (cam.front_h - 1) / 2.0;
  const double st = std::sin(cam.tilt), ct = std::cos(cam.tilt);
  front_ground_.resize(static_cast<std::size_t>(cam.front_w) * cam.front_h);
  for (int v = 0; v < cam.front_h; ++v) {
    for (int u = 0; u < cam.front_w; ++u) {
      const double uc = (u - cx) / fx;
      const double vc = (v - cy) / fx;
      const double down = st + vc * ct;  // ray z-slope toward the floor
      GroundPt g{{0.0, 0.0}, false};
      if (down > 1e-9) {
        const double t = cam.height / down;
        g.p = {t * (ct - vc * st), t * uc};
        g.valid = true;
      }
      front_ground_[static_cast<std::size_t>(v) * cam.front_w + u] = g;
    }
  }
  const double mpp = cam.top_window / cam.top_h;
  top_ground_.resize(static_cast<std::size_t>(cam.top_w) * cam.top_h);
  for (int v = 0; v < cam.top_h; ++v)
    for (int u = 0; u < cam.top_w; ++u)
      top_ground_[static_cast<std::size_t>(v) * cam.top_w + u] = {
          (cam.top_h - 1 - v + 0.5) * mpp, (u - (cam.top_w - 1) / 2.0) * mpp};

  front_ = percep::BinaryImage(cam.front_w, cam.front_h);
  top_ = percep::BinaryImage(cam.top_w, cam.top_h);
  reset(0);
}

void World::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Pose& sp = cfg_.track.start_pose;
  const double amp = cfg_.start_jitter * cfg_.track.width;
  std::uniform_real_distribution<double> jitter(-amp, amp);
  const double off = amp > 0.0 ? jitter(rng) : 0.0;
  pose_ = {sp.x - off * std::sin(sp.heading), sp.y + off * std::cos(sp.heading),
           sp.heading};
  lag_.assign(static_cast<std::size_t>(cfg_.lag_steps), {0.0, 0.0});
  terminal_ = Terminal::none;
  steps_ = 0;
  unwrapped_ = 0.0;
  progress_max_ = 0.0;
  const auto raw = geom_.progress({pose_.x, pose_.y});
  prev_raw_s_ = raw.value_or(0.0);
  render();
}

void World::update_progress() {
  const auto raw = geom_.progress({pose_.x, pose_.y});
  if (!raw) return;  // e.g. riding a branch away from the main path
  double d = *raw - prev_raw_s_;
  if (closed_loop_) d -= cfg_.track.goal_s * std::round(d / cfg_.track.goal_s);
  unwrapped_ += d;
  prev_raw_s_ = *raw;
  if (unwrapped_ > progress_max_) progress_max_ = unwrapped_;
}

StepOutcome World::step(double v_cmd, double w_cmd) {
  if (terminal_ != Terminal::none)
    throw std::logic_error("step() called on a finished episode");
  lag_.emplace_back(v_cmd, w_cmd);
  const auto [v, w] = lag_.front();
  lag_.pop_front();
  pose_.x += v * std::cos(pose_.heading) * cfg_.dt;
  pose_.y += v * std::sin(pose_.heading) * cfg_.dt;
  pose_.heading = wrap_angle(pose_.heading + w * cfg_.dt);
  ++steps_;
  update_progress();
  render();
  const double goal_at =
      cfg_.track.goal_s - start_s_ - cfg_.goal_tol_widths * cfg_.track.width;
  if (progress_max_ >= goal_at && steps_ > cfg_.min_goal_steps)
    terminal_ = Terminal::goal;
  else if (front_.empty_ink())
    terminal_ = Terminal::out_of_line;
  return {pose_, terminal_, v, w, progress_max_};
}

void World::render() {
  const double ch = std::cos(pose_.heading), sh = std::sin(pose_.heading);
  auto world_ink = [&](Vec2 local) {
    return raster_.ink_at({pose_.x + ch * local.x - sh * local.y,
                           pose_.y + sh * local.x + ch * local.y});
  };
  for (std::size_t i = 0; i < front_ground_.size(); ++i) {
    const auto& g = front_ground_[i];
    front_.px[i] = g.valid && world_ink(g.p) ? 1 : 0;
  }
  for (std::size_t i = 0; i < top_ground_.size(); ++i)
    top_.px[i] = world_ink(top_ground_[i]) ? 1 : 0;
}

}  // namespace sacpid::sim
