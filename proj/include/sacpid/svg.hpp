#pragma once
#include <string>
#include <vector>

namespace sacpid::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color;      // empty -> palette by position
  double width = 1.6;
  double opacity = 1.0;
};

struct ChartSpec {
  std::string title, x_label, y_label;
  int width = 720;
  int height = 420;
};

// Centered moving average; edge windows shrink to what is in range.
// window <= 1 is the identity.
std::vector<double> moving_average(const std::vector<double>& v, int window);

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series);

// Plotters over the run CSVs.  The CSVs keep raw values; smoothing happens
// only here, as a centered moving average with the window named in the
// series label (success rate: 100 episodes, matching the trailing-success
// window; reward: 25 episodes; error traces: 9 steps).
void plot_training(const std::string& metrics_csv, const std::string& out_dir);
void plot_eval_error(const std::string& trajectory_csv,
                     const std::string& out_path);
void plot_compare_error(const std::string& compare_csv,
                        const std::string& out_path);

}  // namespace sacpid::svg
