#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sacpid/config.hpp"
#include "sacpid/pid.hpp"
#include "sacpid/sac.hpp"
#include "sacpid/sim.hpp"

namespace sacpid::harness {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

// Reward branches: goal -> zeta_s*s(w) + zeta_v*v(w) + g; left the line ->
// same credit minus g; otherwise the shaped running reward
// zeta_r / (1 + b1|e(t)| + b2|e(t-1)| + b3|e(t-2)|).  distance/elapsed
// describe the whole episode so far; hist holds x4 at t, t-1, t-2.
double compute_reward(sim::Terminal terminal, const pid::ErrorHistory& hist,
                      double distance, double elapsed,
                      const cfg::RewardConfig& rc);

// Everything a gain policy may condition on at one step.
struct StepInputs {
  std::array<double, 13> state;
  double x4{};        // five-point lateral error, in [-1,1]
  double dx4{};       // x4(t) - x4(t-1)
  double e_c{};       // raw curvature error (clamped to +-e_c_max)
  double ec_unit{};   // e_c / e_c_max
  double dec_unit{};  // ec_unit(t) - ec_unit(t-1)
  double v_prev{}, w_prev{};  // commands applied on the previous step
};

// Returns the unit action in [-1,1]^6; run_episode maps it onto the gain
// bounds itself so SAC and fuzzy paths share one code path.
using GainFn = std::function<std::array<double, 6>(const StepInputs&)>;

// Fired after each world step with the transition the step produced;
// `terminal` excludes step-cap truncation (which bootstraps).
using TransitionHook = std::function<void(
    const std::array<double, 13>& s, const std::array<double, 13>& s2,
    double reward, bool terminal)>;

struct StepTrace {
  int step{};
  double px{}, py{}, heading{};
  double x4{}, e_c{};
  double v_cmd{}, w_cmd{};
  double reward{};
  double progress{};
  double v_applied{}, w_applied{};  // lag-queue head the world acted on
};

struct EpisodeResult {
  bool success{};       // reached the goal
  bool out_of_line{};   // lost the line (world signal or perception loss)
  Pose start{};         // pose right after the seeded reset
  int steps{};
  double distance{};    // final progress, m
  double elapsed{};     // steps * dt, s
  double ret{};         // sum of rewards
  double max_abs_x4{};
  std::vector<StepTrace> trace;
};

struct EpisodeOptions {
  int step_cap = 600;
  std::uint64_t seed = 0;
  bool record_trace = false;
  TransitionHook hook;  // optional
  // Optional view tap: step 0 right after reset, then after every world
  // step; used by the CLI frame dump.
  std::function<void(const sim::World&, int step)> frame_hook;
};

EpisodeResult run_episode(sim::World& world, const cfg::RunConfig& cfg,
                          const GainFn& gains, const EpisodeOptions& opt);

// Gain sources for the shared episode loop.
GainFn sac_policy(sac::Agent& agent, bool explore);
GainFn fuzzy_policy(const cfg::RunConfig& cfg);

struct TrainResult {
  int episodes_run{};
  double trailing_success{};  // over the final (up to) 100 episodes
  std::string checkpoint_path;
  std::string metrics_path;
};

// Full training run: episode loop, metrics CSV, periodic checkpoints, NaN
// abort with a batch dump, optional trailing-success early stop.
TrainResult train(const cfg::RunConfig& cfg);

struct EvalRow {
  std::string path;   // track name
  std::string model;  // checkpoint path or controller label
  int tests{};
  int successes{};
  double rate{};    // percent
  double mean_v{};  // m/s over successful runs
  double std_v{};
  double mean_abs_x4{};  // over every logged step
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string to_text() const;  // aligned table
  std::string to_json() const;
};

// n seeded exploit rollouts; per-run trajectories land in out_dir when it is
// non-empty (trajectory.csv, report files).
EvalReport evaluate(const cfg::RunConfig& cfg, const std::string& checkpoint,
                    int tests, const std::string& out_dir = "");

struct CompareReport {
  EvalRow sac;
  EvalRow fuzzy;
  // per-run x4 traces for overlay plots
  std::vector<std::vector<double>> sac_x4, fuzzy_x4;
  std::string to_text() const;
  std::string to_json() const;
};

// Both controllers over identical world seeds.
CompareReport compare(const cfg::RunConfig& cfg, const std::string& checkpoint,
                      int tests, const std::string& out_dir = "");

}  // namespace sacpid::harness
