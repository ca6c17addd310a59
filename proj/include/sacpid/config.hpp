#pragma once
#include <cstdint>
#include <string>

#include "sacpid/perception.hpp"
#include "sacpid/pid.hpp"
#include "sacpid/sac.hpp"
#include "sacpid/sim.hpp"
#include "sacpid/track.hpp"

namespace sacpid::cfg {

// Three-branch reward weights: running-branch shaping zeta_r/beta*, terminal
// distance/velocity credit zeta_s/zeta_v, and the goal bonus / escape
// penalty g.
struct RewardConfig {
  double zeta_r = 0.5, zeta_s = 0.3, zeta_v = 0.2;
  double beta1 = 0.7, beta2 = 0.2, beta3 = 0.1;
  double g = 20.0;
};

struct TrackSelect {
  std::string name = "circle";  // builtin name; ignored when file is set
  double scale = 1.0;
  std::string file;             // optional track spec path
};

struct RunConfig {
  TrackSelect track;
  sim::WorldConfig world;  // world.track is resolved from `track` on load
  percep::CurvatureEstimator::Params curvature;  // embeds PerceptionConfig
  pid::ControlConfig control;
  pid::GainBounds bounds;
  sac::SacHyper sac;
  RewardConfig reward;

  int episodes = 1500;  // M
  int step_cap = 600;   // N, truncation (bootstrapped), not failure
  std::uint64_t seed = 1;
  int checkpoint_interval = 100;    // episodes between saves; 0 = final only
  double early_stop_success = 0.0;  // trailing-100 success rate; 0 = off
  std::string fuzzy_rules;          // optional rule-table file for compare
  std::string out_dir = "runs";
};

track::TrackSpec resolve_track(const TrackSelect& sel);

// Strict JSON load: every key present, values validated, referenced files
// checked; throws std::runtime_error with the offending key or file.
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace sacpid::cfg
