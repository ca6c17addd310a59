#include "sacpid/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sacpid::svg {
namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string num(double v, const char* fmt = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

// Tick step of the form {1,2,5}*10^k giving at most `target` intervals.
double nice_step(double range, int target) {
  if (!(range > 0)) return 1.0;
  double raw = range / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) return mag * m;
  }
  return mag * 10.0;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v + 0.0);  // normalize -0
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad(double frac) {
    if (lo > hi) {  // no finite data
      lo = 0;
      hi = 1;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      double p = (hi - lo) * frac;
      lo -= p;
      hi += p;
    }
  }
};

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

// Minimal CSV reader: header row of names, numeric cells except where the
// caller pulls a column out as text.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("missing CSV column: " + name);
  }
  std::vector<double> nums(const std::string& name) const {
    int c = col(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r.at(c)));
    return out;
  }
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Csv csv;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  csv.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    csv.rows.push_back(split(line));
  }
  return csv;
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& v, int window) {
  if (window <= 1 || v.empty()) return v;
  int n = static_cast<int>(v.size());
  int half = window / 2;
  std::vector<double> out(v.size());
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half);
    int hi = std::min(n - 1, i + half);
    double sum = 0;
    for (int j = lo; j <= hi; ++j) sum += v[j];
    out[i] = sum / (hi - lo + 1);
  }
  return out;
}

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  const double ml = 62, mr = 18, mt = 34, mb = 48;
  const double pw = spec.width - ml - mr;
  const double ph = spec.height - mt - mb;

  Range rx, ry;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        rx.add(s.x[i]);
        ry.add(s.y[i]);
      }
  rx.pad(0.02);
  ry.pad(0.06);

  auto px = [&](double v) { return ml + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double v) { return mt + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
      << " " << spec.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"11\">\n";

  // gridlines + ticks
  auto ticks = [](const Range& r, int target) {
    std::vector<double> t;
    double step = nice_step(r.hi - r.lo, target);
    for (double v = std::ceil(r.lo / step) * step; v <= r.hi + step * 1e-9;
         v += step)
      t.push_back(v);
    return t;
  };
  for (double v : ticks(rx, 6)) {
    double x = px(v);
    out << "<line x1=\"" << num(x) << "\" y1=\"" << num(mt) << "\" x2=\""
        << num(x) << "\" y2=\"" << num(mt + ph)
        << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << num(x) << "\" y=\"" << num(mt + ph + 16)
        << "\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
  }
  for (double v : ticks(ry, 5)) {
    double y = py(v);
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(ml + pw) << "\" y2=\"" << num(y)
        << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
  }
  out << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\""
      << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1\"/>\n";

  // series
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::string color = s.color.empty()
                            ? kPalette[si % (sizeof kPalette / sizeof *kPalette)]
                            : s.color;
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"" << num(s.width, "%.1f") << "\" stroke-opacity=\""
        << num(s.opacity, "%.2f") << "\" points=\"";
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
    }
    out << "\"/>\n";
  }

  // legend, top-right inside the plot
  double lx = ml + pw - 8, ly = mt + 14;
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.label.empty()) continue;
    std::string color = s.color.empty()
                            ? kPalette[si % (sizeof kPalette / sizeof *kPalette)]
                            : s.color;
    out << "<line x1=\"" << num(lx - 150) << "\" y1=\"" << num(ly - 4)
        << "\" x2=\"" << num(lx - 130) << "\" y2=\"" << num(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(lx - 124) << "\" y=\"" << num(ly) << "\">"
        << esc(s.label) << "</text>\n";
    ly += 16;
  }

  out << "<text x=\"" << num(spec.width / 2.0) << "\" y=\"18\" "
      << "text-anchor=\"middle\" font-size=\"14\">" << esc(spec.title)
      << "</text>\n"
      << "<text x=\"" << num(ml + pw / 2) << "\" y=\""
      << num(spec.height - 10.0) << "\" text-anchor=\"middle\">"
      << esc(spec.x_label) << "</text>\n"
      << "<text x=\"14\" y=\"" << num(mt + ph / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num(mt + ph / 2) << ")\">" << esc(spec.y_label) << "</text>\n"
      << "</g>\n</svg>\n";
  return out.str();
}

void plot_training(const std::string& metrics_csv, const std::string& out_dir) {
  Csv csv = read_csv(metrics_csv);
  auto episode = csv.nums("episode");
  auto ret = csv.nums("return");
  auto success = csv.nums("success_flag");

  write_file(out_dir + "/success_rate.svg",
             line_chart({"Success rate", "episode", "success rate"},
                        {{"raw outcome", episode, success, "", 1.0, 0.25},
                         {"100-episode moving average", episode,
                          moving_average(success, 100), "", 1.6, 1.0}}));
  write_file(out_dir + "/reward.svg",
             line_chart({"Reward", "episode", "return"},
                        {{"raw return", episode, ret, "", 1.0, 0.25},
                         {"25-episode moving average", episode,
                          moving_average(ret, 25), "", 1.6, 1.0}}));
}

namespace {

// Longest run in a (group, run, step, x4) table; the most complete lap is
// the best analog of the paper's single-run error panels.
struct Trace {
  std::vector<double> step, x4;
};

Trace longest_run(const Csv& csv, const std::string& group_col,
                  const std::string& group) {
  int gc = group_col.empty() ? -1 : csv.col(group_col);
  int rc = csv.col("run"), sc = csv.col("step"), xc = csv.col("x4");
  std::map<std::string, Trace> runs;
  for (const auto& r : csv.rows) {
    if (gc >= 0 && r[gc] != group) continue;
    Trace& t = runs[r[rc]];
    t.step.push_back(std::stod(r[sc]));
    t.x4.push_back(std::stod(r[xc]));
  }
  Trace best;
  for (auto& [id, t] : runs)
    if (t.step.size() > best.step.size()) best = std::move(t);
  return best;
}

}  // namespace

void plot_eval_error(const std::string& trajectory_csv,
                     const std::string& out_path) {
  Csv csv = read_csv(trajectory_csv);
  Trace t = longest_run(csv, "", "");
  write_file(out_path,
             line_chart({"Error", "step", "x4"},
                        {{"raw x4", t.step, t.x4, "", 1.0, 0.3},
                         {"9-step moving average", t.step,
                          moving_average(t.x4, 9), "", 1.6, 1.0}}));
}

void plot_compare_error(const std::string& compare_csv,
                        const std::string& out_path) {
  Csv csv = read_csv(compare_csv);
  Trace sac = longest_run(csv, "controller", "sac-pid");
  Trace fz = longest_run(csv, "controller", "fuzzy-pid");
  write_file(out_path,
             line_chart({"Error comparison", "step", "x4"},
                        {{"sac-pid (9-step average)", sac.step,
                          moving_average(sac.x4, 9), "", 1.6, 1.0},
                         {"fuzzy-pid (9-step average)", fz.step,
                          moving_average(fz.x4, 9), "", 1.6, 1.0}}));
}

}  // namespace sacpid::svg
