#include "sacpid/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sacpid/fuzzy.hpp"

namespace sacpid::cfg {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
  throw std::runtime_error("config error: " + what);
}

const json& field(const json& j, const char* section, const char* key) {
  if (!j.contains(key))
    bad(std::string("missing key '") + section + "." + key + "'");
  return j.at(key);
}

double num(const json& j, const char* section, const char* key) {
  const json& v = field(j, section, key);
  if (!v.is_number()) bad(std::string("'") + section + "." + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* section, const char* key) {
  const json& v = field(j, section, key);
  if (!v.is_number_integer())
    bad(std::string("'") + section + "." + key + "' must be an integer");
  return v.get<int>();
}

std::string text(const json& j, const char* section, const char* key) {
  const json& v = field(j, section, key);
  if (!v.is_string()) bad(std::string("'") + section + "." + key + "' must be a string");
  return v.get<std::string>();
}

const json& section(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing section '") + key + "'");
  if (!j.at(key).is_object()) bad(std::string("'") + key + "' must be an object");
  return j.at(key);
}

constexpr double kDegree = M_PI / 180.0;

void require(bool ok, const std::string& what) {
  if (!ok) bad(what);
}

}  // namespace

track::TrackSpec resolve_track(const TrackSelect& sel) {
  if (!sel.file.empty()) return track::load_track(sel.file);
  const auto kind = track::builtin_from_name(sel.name);
  if (!kind) bad("unknown builtin track '" + sel.name + "'");
  require(sel.scale > 0.0, "track.scale must be positive");
  return track::make_builtin(*kind, sel.scale);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    bad(path + ": " + e.what());
  }

  RunConfig c;

  const json& jt = section(j, "track");
  c.track.name = text(jt, "track", "name");
  c.track.scale = num(jt, "track", "scale");
  c.track.file = text(jt, "track", "file");

  const json& jw = section(j, "world");
  c.world.dt = num(jw, "world", "dt");
  c.world.lag_steps = integer(jw, "world", "lag_steps");
  c.world.raster_cell = num(jw, "world", "raster_cell");
  c.world.start_jitter = num(jw, "world", "start_jitter");
  c.world.goal_tol_widths = num(jw, "world", "goal_tol_widths");
  c.world.min_goal_steps = integer(jw, "world", "min_goal_steps");
  require(c.world.dt > 0.0, "world.dt must be positive");
  require(c.world.lag_steps >= 0, "world.lag_steps must be >= 0");
  require(c.world.raster_cell > 0.0, "world.raster_cell must be positive");

  const json& jc = section(j, "camera");
  auto& cam = c.world.camera;
  cam.front_w = integer(jc, "camera", "front_w");
  cam.front_h = integer(jc, "camera", "front_h");
  cam.height = num(jc, "camera", "height");
  cam.tilt = num(jc, "camera", "tilt_deg") * kDegree;
  cam.hfov = num(jc, "camera", "hfov_deg") * kDegree;
  cam.top_w = integer(jc, "camera", "top_w");
  cam.top_h = integer(jc, "camera", "top_h");
  cam.top_window = num(jc, "camera", "top_window");
  require(cam.front_w > 0 && cam.front_h > 0, "camera front size must be positive");
  require(cam.top_w > 0 && cam.top_h > 0, "camera top size must be positive");
  require(cam.height > 0.0, "camera.height must be positive");

  const json& jp = section(j, "perception");
  auto& per = c.curvature.perception;
  const std::string mode = text(jp, "perception", "tau_mode");
  if (mode == "scaled")
    per.tau_mode = percep::PerceptionConfig::TauMode::scaled;
  else if (mode == "raw")
    per.tau_mode = percep::PerceptionConfig::TauMode::raw;
  else
    bad("perception.tau_mode must be 'scaled' or 'raw'");
  per.tau1 = num(jp, "perception", "tau1");
  per.tau2 = num(jp, "perception", "tau2");
  per.bridge_fit_rows = integer(jp, "perception", "bridge_fit_rows");
  per.bridge_max_gap = integer(jp, "perception", "bridge_max_gap");
  per.bridge_tol = integer(jp, "perception", "bridge_tol");
  require(per.tau1 <= per.tau2, "perception.tau1 must not exceed tau2");

  const json& jk = section(j, "curvature");
  c.curvature.m_per_px = num(jk, "curvature", "m_per_px");
  c.curvature.v_floor = num(jk, "curvature", "v_floor");
  c.curvature.e_c_max = num(jk, "curvature", "e_c_max");
  require(c.curvature.m_per_px > 0.0, "curvature.m_per_px must be positive");
  require(c.curvature.e_c_max > 0.0, "curvature.e_c_max must be positive");

  const json& jo = section(j, "control");
  c.control.eta = num(jo, "control", "eta");
  c.control.omega_max = num(jo, "control", "omega_max");
  c.control.a_x = num(jo, "control", "a_x");
  c.control.b_x = num(jo, "control", "b_x");
  c.control.v_min = num(jo, "control", "v_min");
  require(c.control.omega_max > 0.0, "control.omega_max must be positive");
  require(c.control.v_min > 0.0 && c.control.v_min <= c.control.b_x,
          "control.v_min must lie in (0, b_x]");

  const json& jb = section(j, "gain_bounds");
  const json& lo = field(jb, "gain_bounds", "lo");
  const json& hi = field(jb, "gain_bounds", "hi");
  if (!lo.is_array() || lo.size() != 6 || !hi.is_array() || hi.size() != 6)
    bad("gain_bounds.lo/hi must have six entries");
  for (int i = 0; i < 6; ++i) {
    c.bounds.lo[i] = lo[i].get<double>();
    c.bounds.hi[i] = hi[i].get<double>();
    require(c.bounds.lo[i] < c.bounds.hi[i], "gain_bounds.lo must be < hi");
  }

  const json& js = section(j, "sac");
  require(text(js, "sac", "optimizer") == "adam", "sac.optimizer must be 'adam'");
  require(text(js, "sac", "nonlinearity") == "relu",
          "sac.nonlinearity must be 'relu'");
  c.sac.alpha = num(js, "sac", "alpha");
  c.sac.gamma = num(js, "sac", "gamma");
  c.sac.lr = num(js, "sac", "lr");
  c.sac.chi = num(js, "sac", "chi");
  c.sac.batch = integer(js, "sac", "batch");
  c.sac.target_interval = integer(js, "sac", "target_interval");
  c.sac.grad_steps = integer(js, "sac", "grad_steps");
  c.sac.buffer_capacity =
      static_cast<std::size_t>(field(js, "sac", "buffer_capacity").get<double>());
  const json& hidden = field(js, "sac", "hidden");
  if (!hidden.is_array() || hidden.empty()) bad("sac.hidden must be a non-empty array");
  c.sac.hidden.clear();
  for (const auto& hjs : hidden) {
    const int hsize = hjs.get<int>();
    require(hsize > 0, "sac.hidden entries must be positive");
    c.sac.hidden.push_back(hsize);
  }
  require(c.sac.alpha > 0.0, "sac.alpha must be positive");
  require(c.sac.gamma > 0.0 && c.sac.gamma < 1.0, "sac.gamma must lie in (0,1)");
  require(c.sac.chi > 0.0 && c.sac.chi <= 1.0, "sac.chi must lie in (0,1]");
  require(c.sac.lr > 0.0, "sac.lr must be positive");
  require(c.sac.batch > 0, "sac.batch must be positive");
  require(c.sac.target_interval > 0, "sac.target_interval must be positive");
  require(c.sac.grad_steps > 0, "sac.grad_steps must be positive");
  require(c.sac.buffer_capacity > static_cast<std::size_t>(c.sac.batch),
          "sac.buffer_capacity must exceed the batch size");

  const json& jr = section(j, "reward");
  c.reward.zeta_r = num(jr, "reward", "zeta_r");
  c.reward.zeta_s = num(jr, "reward", "zeta_s");
  c.reward.zeta_v = num(jr, "reward", "zeta_v");
  c.reward.beta1 = num(jr, "reward", "beta1");
  c.reward.beta2 = num(jr, "reward", "beta2");
  c.reward.beta3 = num(jr, "reward", "beta3");
  c.reward.g = num(jr, "reward", "g");
  require(c.reward.zeta_r > 0 && c.reward.zeta_s > 0 && c.reward.zeta_v > 0,
          "reward.zeta_* must be positive");
  require(c.reward.beta1 > 0 && c.reward.beta2 > 0 && c.reward.beta3 > 0,
          "reward.beta* must be positive");

  const json& jrun = section(j, "run");
  c.episodes = integer(jrun, "run", "episodes");
  c.step_cap = integer(jrun, "run", "step_cap");
  c.seed = static_cast<std::uint64_t>(field(jrun, "run", "seed").get<double>());
  c.checkpoint_interval = integer(jrun, "run", "checkpoint_interval");
  c.early_stop_success = num(jrun, "run", "early_stop_success");
  c.fuzzy_rules = text(jrun, "run", "fuzzy_rules");
  c.out_dir = text(jrun, "run", "out_dir");
  require(c.episodes > 0, "run.episodes must be positive");
  require(c.step_cap > 0, "run.step_cap must be positive");
  require(c.checkpoint_interval >= 0, "run.checkpoint_interval must be >= 0");
  require(c.early_stop_success >= 0.0 && c.early_stop_success <= 1.0,
          "run.early_stop_success must lie in [0,1]");

  c.world.track = resolve_track(c.track);         // validates track.file
  if (!c.fuzzy_rules.empty()) fuzzy::load_rules(c.fuzzy_rules);
  return c;
}

void save_run_config(const RunConfig& c, const std::string& path) {
  json j;
  j["track"] = {{"name", c.track.name},
                {"scale", c.track.scale},
                {"file", c.track.file}};
  j["world"] = {{"dt", c.world.dt},
                {"lag_steps", c.world.lag_steps},
                {"raster_cell", c.world.raster_cell},
                {"start_jitter", c.world.start_jitter},
                {"goal_tol_widths", c.world.goal_tol_widths},
                {"min_goal_steps", c.world.min_goal_steps}};
  const auto& cam = c.world.camera;
  j["camera"] = {{"front_w", cam.front_w}, {"front_h", cam.front_h},
                 {"height", cam.height},   {"tilt_deg", cam.tilt / kDegree},
                 {"hfov_deg", cam.hfov / kDegree},
                 {"top_w", cam.top_w},     {"top_h", cam.top_h},
                 {"top_window", cam.top_window}};
  const auto& per = c.curvature.perception;
  j["perception"] = {
      {"tau_mode",
       per.tau_mode == percep::PerceptionConfig::TauMode::scaled ? "scaled" : "raw"},
      {"tau1", per.tau1},
      {"tau2", per.tau2},
      {"bridge_fit_rows", per.bridge_fit_rows},
      {"bridge_max_gap", per.bridge_max_gap},
      {"bridge_tol", per.bridge_tol}};
  j["curvature"] = {{"m_per_px", c.curvature.m_per_px},
                    {"v_floor", c.curvature.v_floor},
                    {"e_c_max", c.curvature.e_c_max}};
  j["control"] = {{"eta", c.control.eta},
                  {"omega_max", c.control.omega_max},
                  {"a_x", c.control.a_x},
                  {"b_x", c.control.b_x},
                  {"v_min", c.control.v_min}};
  j["gain_bounds"] = {{"lo", c.bounds.lo}, {"hi", c.bounds.hi}};
  j["sac"] = {{"optimizer", "adam"},
              {"nonlinearity", "relu"},
              {"alpha", c.sac.alpha},
              {"gamma", c.sac.gamma},
              {"lr", c.sac.lr},
              {"chi", c.sac.chi},
              {"batch", c.sac.batch},
              {"target_interval", c.sac.target_interval},
              {"grad_steps", c.sac.grad_steps},
              {"buffer_capacity", c.sac.buffer_capacity},
              {"hidden", c.sac.hidden}};
  j["reward"] = {{"zeta_r", c.reward.zeta_r}, {"zeta_s", c.reward.zeta_s},
                 {"zeta_v", c.reward.zeta_v}, {"beta1", c.reward.beta1},
                 {"beta2", c.reward.beta2},   {"beta3", c.reward.beta3},
                 {"g", c.reward.g}};
  j["run"] = {{"episodes", c.episodes},
              {"step_cap", c.step_cap},
              {"seed", c.seed},
              {"checkpoint_interval", c.checkpoint_interval},
              {"early_stop_success", c.early_stop_success},
              {"fuzzy_rules", c.fuzzy_rules},
              {"out_dir", c.out_dir}};
  std::ofstream out(path);
  if (!out) bad("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace sacpid::cfg
