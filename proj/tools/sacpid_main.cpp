#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "sacpid/checkpoint.hpp"
#include "sacpid/config.hpp"
#include "sacpid/harness.hpp"
#include "sacpid/image.hpp"
#include "sacpid/svg.hpp"
#include "sacpid/track.hpp"

namespace fs = std::filesystem;
using namespace sacpid;

namespace {

// Shortest round-trip formatting, same policy as the run CSVs.
std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

// Config for a trained checkpoint: an explicit file wins, else the
// config.json the training run saved next to it, else paper defaults (the
// checkpoint shapes still have to match).
cfg::RunConfig checkpoint_config(const std::string& config,
                                 const std::string& checkpoint) {
  if (!config.empty()) return cfg::load_run_config(config);
  const fs::path side = fs::path(checkpoint).parent_path() / "config.json";
  if (fs::exists(side)) return cfg::load_run_config(side.string());
  return {};
}

void apply_track(cfg::RunConfig& c, const std::string& track, double scale) {
  if (!track.empty()) {
    c.track.name = track;
    c.track.file.clear();
  }
  if (scale > 0) c.track.scale = scale;
  c.world.track = cfg::resolve_track(c.track);
}

// Sim-level logs: one CSV per run in the format the simulator documents,
// plus the front view as a portable bitmap per step.
void dump_frames(const cfg::RunConfig& c, const std::string& checkpoint,
                 int tests, const fs::path& out) {
  sac::Agent agent(c.sac, 0);
  ckpt::load(checkpoint, agent);
  sim::World world(c.world);
  const auto policy = harness::sac_policy(agent, false);

  for (int i = 0; i < tests; ++i) {
    const fs::path dir = out / "frames" / ("run" + std::to_string(i));
    fs::create_directories(dir);

    harness::EpisodeOptions opt;
    opt.step_cap = c.step_cap;
    opt.seed = harness::mix_seed(c.seed, 100000 + static_cast<std::uint64_t>(i));
    opt.record_trace = true;
    opt.frame_hook = [&dir](const sim::World& w, int step) {
      char leaf[32];
      std::snprintf(leaf, sizeof leaf, "front_%04d.pbm", step);
      percep::write_pbm(w.front(), (dir / leaf).string());
    };
    const auto res = harness::run_episode(world, c, policy, opt);

    std::ofstream csv(out / ("sim_trajectory_run" + std::to_string(i) + ".csv"),
                      std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write sim trajectory CSV");
    csv << "step,x,y,heading,v_cmd,w_cmd,v_applied,w_applied,x4,terminal\n";
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
      const auto& t = res.trace[k];
      const bool last = k + 1 == res.trace.size();
      const char* terminal = !last          ? "none"
                             : res.success  ? "goal"
                             : res.out_of_line ? "out_of_line"
                                               : "none";
      csv << t.step << ',' << fmt(t.px) << ',' << fmt(t.py) << ','
          << fmt(t.heading) << ',' << fmt(t.v_cmd) << ',' << fmt(t.w_cmd)
          << ',' << fmt(t.v_applied) << ',' << fmt(t.w_applied) << ','
          << fmt(t.x4) << ',' << terminal << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAC-tuned hierarchical PID line follower"};
  app.require_subcommand(1);

  // train
  std::string tr_config, tr_out;
  std::uint64_t tr_seed = 0;
  bool tr_no_plots = false;
  auto* train = app.add_subcommand("train", "run a training session");
  train->add_option("--config", tr_config, "run config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  auto* tr_seed_opt = train->add_option("--seed", tr_seed, "override the seed");
  train->add_option("--out", tr_out, "override the output directory");
  train->add_flag("--no-plots", tr_no_plots, "skip SVG curve output");
  train->callback([&] {
    auto c = cfg::load_run_config(tr_config);
    if (tr_seed_opt->count()) c.seed = tr_seed;
    if (!tr_out.empty()) c.out_dir = tr_out;
    const auto res = harness::train(c);
    if (!tr_no_plots) svg::plot_training(res.metrics_path, c.out_dir);
    std::cout << "episodes: " << res.episodes_run << "\n"
              << "trailing success: " << fmt(res.trailing_success) << "\n"
              << "checkpoint: " << res.checkpoint_path << "\n"
              << "metrics: " << res.metrics_path << "\n";
  });

  // eval
  std::string ev_ckpt, ev_track, ev_config, ev_out;
  int ev_tests = 20;
  double ev_scale = 0;
  std::uint64_t ev_seed = 0;
  bool ev_no_plots = false, ev_dump = false;
  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  eval->add_option("--checkpoint", ev_ckpt, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--track", ev_track, "builtin track name");
  eval->add_option("--tests", ev_tests, "number of evaluation episodes");
  eval->add_option("--config", ev_config, "run config JSON")
      ->check(CLI::ExistingFile);
  auto* ev_out_opt = eval->add_option("--out", ev_out, "report directory");
  eval->add_option("--scale", ev_scale, "override the track scale");
  auto* ev_seed_opt = eval->add_option("--seed", ev_seed, "override the seed");
  eval->add_flag("--no-plots", ev_no_plots, "skip SVG curve output");
  eval->add_flag("--dump-frames", ev_dump,
                 "write per-step camera bitmaps and sim-level logs")
      ->needs(ev_out_opt);
  eval->callback([&] {
    auto c = checkpoint_config(ev_config, ev_ckpt);
    if (ev_seed_opt->count()) c.seed = ev_seed;
    apply_track(c, ev_track, ev_scale);
    const auto report = harness::evaluate(c, ev_ckpt, ev_tests, ev_out);
    std::cout << report.to_text();
    if (!ev_out.empty()) {
      if (!ev_no_plots)
        svg::plot_eval_error(ev_out + "/trajectory.csv", ev_out + "/error.svg");
      if (ev_dump) dump_frames(c, ev_ckpt, ev_tests, ev_out);
    }
  });

  // compare
  std::string cp_ckpt, cp_track = "fork_circle", cp_config, cp_out, cp_rules;
  int cp_tests = 20;
  double cp_scale = 0;
  std::uint64_t cp_seed = 0;
  bool cp_no_plots = false;
  auto* comp = app.add_subcommand("compare", "trained policy vs fuzzy baseline");
  comp->add_option("--checkpoint", cp_ckpt, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  comp->add_option("--track", cp_track, "builtin track name");
  comp->add_option("--tests", cp_tests, "number of episodes per controller");
  comp->add_option("--config", cp_config, "run config JSON")
      ->check(CLI::ExistingFile);
  comp->add_option("--out", cp_out, "report directory");
  comp->add_option("--rules", cp_rules, "fuzzy rule-table JSON")
      ->check(CLI::ExistingFile);
  comp->add_option("--scale", cp_scale, "override the track scale");
  auto* cp_seed_opt = comp->add_option("--seed", cp_seed, "override the seed");
  comp->add_flag("--no-plots", cp_no_plots, "skip SVG curve output");
  comp->callback([&] {
    auto c = checkpoint_config(cp_config, cp_ckpt);
    if (cp_seed_opt->count()) c.seed = cp_seed;
    if (!cp_rules.empty()) c.fuzzy_rules = cp_rules;
    apply_track(c, cp_track, cp_scale);
    const auto report = harness::compare(c, cp_ckpt, cp_tests, cp_out);
    std::cout << report.to_text();
    if (!cp_out.empty() && !cp_no_plots)
      svg::plot_compare_error(cp_out + "/compare_trajectory.csv",
                              cp_out + "/compare_error.svg");
  });

  // track render
  auto* track = app.add_subcommand("track", "track utilities");
  track->require_subcommand(1);
  std::string rn_spec, rn_out;
  double rn_cell = 0.005, rn_scale = 1.0;
  auto* render = track->add_subcommand("render", "rasterize a track to a graymap");
  render->add_option("file", rn_spec, "track spec file or builtin name")
      ->required();
  render->add_option("--out", rn_out, "output PGM path")->required();
  render->add_option("--cell", rn_cell, "raster cell size, m")
      ->check(CLI::PositiveNumber);
  render->add_option("--scale", rn_scale, "scale for builtin tracks")
      ->check(CLI::PositiveNumber);
  render->callback([&] {
    cfg::TrackSelect sel;
    if (fs::exists(rn_spec))
      sel.file = rn_spec;
    else
      sel.name = rn_spec;
    sel.scale = rn_scale;
    const auto spec = cfg::resolve_track(sel);
    const auto img = track::raster_image(track::rasterize(spec, rn_cell));
    percep::write_pgm(img, rn_out);
    std::cout << "wrote " << rn_out << " (" << img.w << "x" << img.h << ")\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "sacpid: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
