#include "sacpid/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "sacpid/checkpoint.hpp"
#include "sacpid/fuzzy.hpp"
#include "sacpid/perception.hpp"

namespace sacpid::harness {

namespace fs = std::filesystem;

namespace {

// shortest exact decimal form; keeps the CSVs byte-stable across reruns
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string track_label(const cfg::RunConfig& c) {
  return c.track.file.empty() ? c.track.name : c.track.file;
}

std::optional<StepInputs> perceive(const sim::World& world,
                                   const cfg::RunConfig& c,
                                   percep::CurvatureEstimator& est,
                                   const StepInputs* prev, double v_prev,
                                   double w_prev) {
  const auto fp = percep::five_points(world.front(), c.curvature.perception);
  if (!fp) return std::nullopt;
  StepInputs in;
  in.e_c = est.update(world.top(), v_prev, w_prev);
  in.x4 = fp->x[3];
  in.ec_unit = std::clamp(in.e_c / c.curvature.e_c_max, -1.0, 1.0);
  in.dx4 = prev ? in.x4 - prev->x4 : 0.0;
  in.dec_unit = prev ? in.ec_unit - prev->ec_unit : 0.0;
  in.v_prev = v_prev;
  in.w_prev = w_prev;
  percep::StateScale sc;
  sc.e_c_max = c.curvature.e_c_max;
  sc.w_max = c.control.omega_max;
  in.state = percep::build_state(*fp, in.e_c, v_prev, w_prev, sc);
  return in;
}

struct VelocityStats {
  double mean{}, stddev{};
};

VelocityStats velocity_stats(const std::vector<double>& v) {
  VelocityStats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double acc = 0.0;
  for (double x : v) acc += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(acc / v.size());
  return s;
}

void write_trajectory_header(std::ofstream& out) {
  out << "run,step,x,y,heading,x4,e_c,v_cmd,w_cmd,reward,progress\n";
}

void write_trajectory_rows(std::ofstream& out, int run,
                           const std::vector<StepTrace>& trace) {
  for (const auto& t : trace) {
    out << run << ',' << t.step << ',' << fmt(t.px) << ',' << fmt(t.py) << ','
        << fmt(t.heading) << ',' << fmt(t.x4) << ',' << fmt(t.e_c) << ','
        << fmt(t.v_cmd) << ',' << fmt(t.w_cmd) << ',' << fmt(t.reward) << ','
        << fmt(t.progress) << '\n';
  }
}

std::string row_text(const EvalRow& r) {
  char buf[256];
  const std::string vel = r.successes > 0
                              ? fixed3(r.mean_v) + "+-" + fixed3(r.std_v)
                              : std::string("-");
  std::snprintf(buf, sizeof(buf), "%-14s %-28s %6d %10d %7.1f  %-14s %9.3f",
                r.path.c_str(), r.model.c_str(), r.tests, r.successes, r.rate,
                vel.c_str(), r.mean_abs_x4);
  return buf;
}

const char* kRowHeader =
    "path           model                         tests  successes   rate%  "
    "velocity m/s    mean|x4|";

nlohmann::json row_json(const EvalRow& r) {
  return {{"path", r.path},         {"model", r.model},
          {"tests", r.tests},       {"successes", r.successes},
          {"rate_percent", r.rate}, {"mean_velocity", r.mean_v},
          {"std_velocity", r.std_v}, {"mean_abs_x4", r.mean_abs_x4}};
}

void dump_batch(const fs::path& path, const sac::Batch& b) {
  std::ofstream out(path);
  if (!out) return;  // best effort: the abort matters more than the dump
  for (int j = 0; j < 13; ++j) out << 's' << j << ',';
  for (int j = 0; j < 6; ++j) out << 'a' << j << ',';
  out << "r,";
  for (int j = 0; j < 13; ++j) out << "s2_" << j << ',';
  out << "done\n";
  for (int i = 0; i < b.s.rows(); ++i) {
    for (int j = 0; j < 13; ++j) out << fmt(b.s(i, j)) << ',';
    for (int j = 0; j < 6; ++j) out << fmt(b.a(i, j)) << ',';
    out << fmt(b.r(i)) << ',';
    for (int j = 0; j < 13; ++j) out << fmt(b.s2(i, j)) << ',';
    out << fmt(b.done(i)) << '\n';
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double compute_reward(sim::Terminal terminal, const pid::ErrorHistory& hist,
                      double distance, double elapsed,
                      const cfg::RewardConfig& rc) {
  if (terminal != sim::Terminal::none) {
    const double v_w = elapsed > 0.0 ? distance / elapsed : 0.0;
    const double credit = rc.zeta_s * distance + rc.zeta_v * v_w;
    return terminal == sim::Terminal::goal ? credit + rc.g : credit - rc.g;
  }
  const double den = 1.0 + rc.beta1 * std::abs(hist.e0()) +
                     rc.beta2 * std::abs(hist.e1()) +
                     rc.beta3 * std::abs(hist.e2());
  return rc.zeta_r / den;
}

EpisodeResult run_episode(sim::World& world, const cfg::RunConfig& c,
                          const GainFn& gains, const EpisodeOptions& opt) {
  world.reset(opt.seed);
  percep::CurvatureEstimator est(c.curvature);
  pid::ErrorHistory main_err, curv_err;
  EpisodeResult res;
  res.start = world.pose();
  if (opt.frame_hook) opt.frame_hook(world, 0);

  auto in = perceive(world, c, est, nullptr, 0.0, 0.0);
  if (!in) {
    res.out_of_line = true;  // no usable line right at the start pose
    return res;
  }
  double w_cmd_prev = 0.0;  // the incremental controller's own recursion
  for (int t = 0; t < opt.step_cap; ++t) {
    const auto a_unit = gains(*in);
    const auto k = c.bounds.from_unit(a_unit);
    main_err.push(in->x4);
    curv_err.push(in->e_c);
    const double w_cmd =
        pid::angular_command(w_cmd_prev, k, main_err, curv_err, c.control);
    const double v_cmd = pid::linear_command(in->x4, c.control);
    const auto out = world.step(v_cmd, w_cmd);
    w_cmd_prev = w_cmd;

    res.steps = t + 1;
    res.distance = out.progress;
    res.elapsed = res.steps * c.world.dt;
    res.max_abs_x4 = std::max(res.max_abs_x4, std::abs(in->x4));

    sim::Terminal term = out.terminal;
    std::optional<StepInputs> next;
    if (term == sim::Terminal::none) {
      next = perceive(world, c, est, &*in, out.applied_v, out.applied_w);
      if (!next) term = sim::Terminal::out_of_line;  // line lost to perception
    }
    const double r =
        compute_reward(term, main_err, res.distance, res.elapsed, c.reward);
    res.ret += r;
    if (opt.record_trace)
      res.trace.push_back({t + 1, out.pose.x, out.pose.y, out.pose.heading,
                           in->x4, in->e_c, v_cmd, w_cmd, r, out.progress,
                           out.applied_v, out.applied_w});
    if (opt.frame_hook) opt.frame_hook(world, t + 1);
    const bool terminal = term != sim::Terminal::none;
    if (opt.hook)
      opt.hook(in->state, next ? next->state : std::array<double, 13>{}, r,
               terminal);
    if (terminal) {
      res.success = term == sim::Terminal::goal;
      res.out_of_line = term == sim::Terminal::out_of_line;
      return res;
    }
    in = std::move(next);
  }
  return res;  // step cap: truncation, neither success nor failure penalty
}

GainFn sac_policy(sac::Agent& agent, bool explore) {
  return [&agent, explore](const StepInputs& in) {
    return agent.act(in.state, explore);
  };
}

GainFn fuzzy_policy(const cfg::RunConfig& c) {
  fuzzy::FuzzyConfig fc;
  if (!c.fuzzy_rules.empty()) fc.rules = fuzzy::load_rules(c.fuzzy_rules);
  fc.bounds = c.bounds;
  return [fc](const StepInputs& in) {
    const auto main =
        fuzzy::controller_outputs(fc.rules.main, in.x4, in.dx4, fc.grid);
    const auto curv = fuzzy::controller_outputs(fc.rules.curv, in.ec_unit,
                                                in.dec_unit, fc.grid);
    return std::array<double, 6>{main[0], main[1], main[2],
                                 curv[0], curv[1], curv[2]};
  };
}

TrainResult train(const cfg::RunConfig& c) {
  const fs::path out_dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output dir " + c.out_dir);
  cfg::save_run_config(c, (out_dir / "config.json").string());

  sim::World world(c.world);
  sac::Agent agent(c.sac, c.seed);
  sac::ReplayBuffer buf(c.sac.buffer_capacity);

  auto metrics = open_out(out_dir / "metrics.csv");
  metrics << "episode,steps,return,J_V,J_Q1,J_Q2,J_pi,success_flag,distance,"
             "mean_speed\n";

  std::deque<int> window;
  double window_sum = 0.0;
  TrainResult result;
  std::array<double, 6> last_a{};
  const GainFn policy = [&](const StepInputs& in) {
    last_a = agent.act(in.state, true);
    return last_a;
  };

  for (int ep = 1; ep <= c.episodes; ++ep) {
    double jv = 0, j1 = 0, j2 = 0, jp = 0;
    int updates = 0;
    EpisodeOptions opt;
    opt.step_cap = c.step_cap;
    opt.seed = mix_seed(c.seed, static_cast<std::uint64_t>(ep));
    opt.hook = [&](const std::array<double, 13>& s,
                   const std::array<double, 13>& s2, double r, bool terminal) {
      buf.push({s, last_a, r, s2, terminal});
      try {
        const auto m = agent.train_step(buf);
        if (m.updated) {
          jv += m.value_loss;
          j1 += m.critic1_loss;
          j2 += m.critic2_loss;
          jp += m.actor_loss;
          ++updates;
        }
      } catch (const sac::DivergedError& err) {
        const fs::path dump = out_dir / "diverged_batch.csv";
        dump_batch(dump, err.batch);
        throw std::runtime_error(std::string("training aborted: ") + err.what() +
                                 "; offending batch dumped to " + dump.string());
      }
    };
    const EpisodeResult res = run_episode(world, c, policy, opt);

    const int flag = res.success ? 1 : 0;
    window.push_back(flag);
    window_sum += flag;
    if (window.size() > 100) {
      window_sum -= window.front();
      window.pop_front();
    }
    const double mean_speed =
        res.elapsed > 0.0 ? res.distance / res.elapsed : 0.0;
    const double inv = updates > 0 ? 1.0 / updates : 0.0;
    metrics << ep << ',' << res.steps << ',' << fmt(res.ret) << ','
            << fmt(jv * inv) << ',' << fmt(j1 * inv) << ',' << fmt(j2 * inv)
            << ',' << fmt(jp * inv) << ',' << flag << ',' << fmt(res.distance)
            << ',' << fmt(mean_speed) << '\n';

    result.episodes_run = ep;
    if (c.checkpoint_interval > 0 && ep % c.checkpoint_interval == 0)
      ckpt::save((out_dir / ("ckpt_ep" + std::to_string(ep) + ".bin")).string(),
                 agent);
    if (c.early_stop_success > 0.0 && window.size() == 100 &&
        window_sum / 100.0 >= c.early_stop_success)
      break;
  }

  result.trailing_success =
      window.empty() ? 0.0 : window_sum / static_cast<double>(window.size());
  result.checkpoint_path = (out_dir / "checkpoint.bin").string();
  result.metrics_path = (out_dir / "metrics.csv").string();
  ckpt::save(result.checkpoint_path, agent);
  return result;
}

std::string EvalReport::to_text() const {
  std::ostringstream ss;
  ss << kRowHeader << '\n';
  for (const auto& r : rows) ss << row_text(r) << '\n';
  return ss.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back(row_json(r));
  return j.dump(2) + "\n";
}

EvalReport evaluate(const cfg::RunConfig& c, const std::string& checkpoint,
                    int tests, const std::string& out_dir) {
  if (tests <= 0) throw std::invalid_argument("tests must be positive");
  sac::Agent agent(c.sac, 0);
  ckpt::load(checkpoint, agent);
  sim::World world(c.world);
  const GainFn policy = sac_policy(agent, false);  // exploit mode enforced

  std::optional<std::ofstream> traj;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    traj = open_out(fs::path(out_dir) / "trajectory.csv");
    write_trajectory_header(*traj);
  }

  EvalRow row;
  row.path = track_label(c);
  row.model = checkpoint;
  row.tests = tests;
  std::vector<double> speeds;
  double abs_x4_sum = 0.0;
  std::size_t abs_x4_n = 0;
  for (int i = 0; i < tests; ++i) {
    EpisodeOptions opt;
    opt.step_cap = c.step_cap;
    opt.seed = mix_seed(c.seed, 100000 + static_cast<std::uint64_t>(i));
    opt.record_trace = true;
    const EpisodeResult res = run_episode(world, c, policy, opt);
    if (res.success) {
      ++row.successes;
      speeds.push_back(res.elapsed > 0.0 ? res.distance / res.elapsed : 0.0);
    }
    for (const auto& t : res.trace) abs_x4_sum += std::abs(t.x4);
    abs_x4_n += res.trace.size();
    if (traj) write_trajectory_rows(*traj, i, res.trace);
  }
  row.rate = 100.0 * row.successes / row.tests;
  const auto vs = velocity_stats(speeds);
  row.mean_v = vs.mean;
  row.std_v = vs.stddev;
  row.mean_abs_x4 = abs_x4_n > 0 ? abs_x4_sum / abs_x4_n : 0.0;

  EvalReport report;
  report.rows.push_back(row);
  if (!out_dir.empty()) {
    open_out(fs::path(out_dir) / "report.txt") << report.to_text();
    open_out(fs::path(out_dir) / "report.json") << report.to_json();
  }
  return report;
}

std::string CompareReport::to_text() const {
  std::ostringstream ss;
  ss << kRowHeader << '\n' << row_text(sac) << '\n' << row_text(fuzzy) << '\n';
  return ss.str();
}

std::string CompareReport::to_json() const {
  nlohmann::json j;
  j["sac_pid"] = row_json(sac);
  j["fuzzy_pid"] = row_json(fuzzy);
  return j.dump(2) + "\n";
}

CompareReport compare(const cfg::RunConfig& c, const std::string& checkpoint,
                      int tests, const std::string& out_dir) {
  if (tests <= 0) throw std::invalid_argument("tests must be positive");
  sac::Agent agent(c.sac, 0);
  ckpt::load(checkpoint, agent);
  sim::World world(c.world);

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < tests; ++i)
    seeds.push_back(mix_seed(c.seed, 200000 + static_cast<std::uint64_t>(i)));

  auto run_side = [&](const GainFn& policy, const char* label, EvalRow& row,
                      std::vector<std::vector<double>>& x4s,
                      std::vector<std::vector<StepTrace>>& traces) {
    row.path = track_label(c);
    row.model = label;
    row.tests = tests;
    std::vector<double> speeds;
    double abs_sum = 0.0;
    std::size_t abs_n = 0;
    for (int i = 0; i < tests; ++i) {
      EpisodeOptions opt;
      opt.step_cap = c.step_cap;
      opt.seed = seeds[static_cast<std::size_t>(i)];
      opt.record_trace = true;
      const EpisodeResult res = run_episode(world, c, policy, opt);
      if (res.success) {
        ++row.successes;
        speeds.push_back(res.elapsed > 0.0 ? res.distance / res.elapsed : 0.0);
      }
      std::vector<double> x4;
      for (const auto& t : res.trace) {
        x4.push_back(t.x4);
        abs_sum += std::abs(t.x4);
      }
      abs_n += res.trace.size();
      x4s.push_back(std::move(x4));
      traces.push_back(res.trace);
    }
    row.rate = 100.0 * row.successes / row.tests;
    const auto vs = velocity_stats(speeds);
    row.mean_v = vs.mean;
    row.std_v = vs.stddev;
    row.mean_abs_x4 = abs_n > 0 ? abs_sum / abs_n : 0.0;
  };

  CompareReport report;
  std::vector<std::vector<StepTrace>> sac_traces, fuzzy_traces;
  run_side(sac_policy(agent, false), "sac-pid", report.sac, report.sac_x4,
           sac_traces);
  run_side(fuzzy_policy(c), "fuzzy-pid", report.fuzzy, report.fuzzy_x4,
           fuzzy_traces);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    open_out(fs::path(out_dir) / "compare.txt") << report.to_text();
    open_out(fs::path(out_dir) / "compare.json") << report.to_json();
    auto traj = open_out(fs::path(out_dir) / "compare_trajectory.csv");
    traj << "controller,run,step,x,y,heading,x4,e_c,v_cmd,w_cmd,reward,"
            "progress\n";
    for (int side = 0; side < 2; ++side) {
      const auto& traces = side == 0 ? sac_traces : fuzzy_traces;
      const char* label = side == 0 ? "sac-pid" : "fuzzy-pid";
      for (std::size_t i = 0; i < traces.size(); ++i)
        for (const auto& t : traces[i]) {
          traj << label << ',' << i << ',' << t.step << ',' << fmt(t.px) << ','
               << fmt(t.py) << ',' << fmt(t.heading) << ',' << fmt(t.x4) << ','
               << fmt(t.e_c) << ',' << fmt(t.v_cmd) << ',' << fmt(t.w_cmd)
               << ',' << fmt(t.reward) << ',' << fmt(t.progress) << '\n';
        }
    }
  }
  return report;
}

}  // namespace sacpid::harness
