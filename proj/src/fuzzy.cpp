#include "sacpid/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sacpid::fuzzy {

namespace {

constexpr double kHalfWidth = 1.0 / 3.0;

double center(int set) { return -1.0 + set * kHalfWidth; }

int clip_set(int v) { return std::clamp(v, -3, 3) + 3; }

double clampu(double x) { return std::clamp(x, -1.0, 1.0); }

// strongest clipped-set activation per output set, then centroid of the max
double defuzzify(const std::array<double, kSets>& strength, int grid) {
  double num = 0.0, den = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double x = -1.0 + 2.0 * g / (grid - 1);
    double mu = 0.0;
    for (int k = 0; k < kSets; ++k)
      mu = std::max(mu, std::min(strength[k], membership(k, x)));
    num += mu * x;
    den += mu;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

double membership(int set, double x) {
  return std::max(0.0, 1.0 - std::abs(x - center(set)) / kHalfWidth);
}

RuleTables default_tables() {
  RuleTables t;
  for (int i = 0; i < kSets; ++i)
    for (int j = 0; j < kSets; ++j) {
      const int ae = std::abs(i - 3), ad = std::abs(j - 3);
      t.kp[i][j] = clip_set(std::max(ae, ad));
      t.ki[i][j] = clip_set(2 * ae - 3);
      t.kd[i][j] = clip_set(ad - 3);
    }
  return t;
}

RuleTables curvature_tables() {
  RuleTables t;
  for (int i = 0; i < kSets; ++i)
    for (int j = 0; j < kSets; ++j) {
      const int ae = std::abs(i - 3), ad = std::abs(j - 3);
      t.kp[i][j] = clip_set(-std::max(ae, ad));
      t.ki[i][j] = clip_set(-ae);
      t.kd[i][j] = clip_set(ad - 3);
    }
  return t;
}

RuleSet load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rule table file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("rule table parse error: " + std::string(e.what()));
  }
  static const std::array<std::string, kSets> names{"NB", "NM", "NS", "ZO",
                                                    "PS", "PM", "PB"};
  auto to_set = [&](const nlohmann::json& cell) -> int {
    if (cell.is_number_integer()) {
      const int v = cell.get<int>();
      if (v < 0 || v >= kSets)
        throw std::runtime_error("rule table index out of range");
      return v;
    }
    if (cell.is_string()) {
      const auto s = cell.get<std::string>();
      const auto it = std::find(names.begin(), names.end(), s);
      if (it == names.end())
        throw std::runtime_error("unknown fuzzy set name: " + s);
      return static_cast<int>(it - names.begin());
    }
    throw std::runtime_error("rule table cells must be names or indices");
  };
  auto read_tables = [&](const char* branch, RuleTables& t) {
    if (!j.contains(branch))
      throw std::runtime_error(std::string("rule file missing branch: ") +
                               branch);
    const auto& b = j.at(branch);
    auto read = [&](const char* key,
                    std::array<std::array<int, kSets>, kSets>& out) {
      if (!b.contains(key))
        throw std::runtime_error(std::string("rule table missing: ") + key);
      const auto& rows = b.at(key);
      if (!rows.is_array() || rows.size() != kSets)
        throw std::runtime_error(std::string("rule table must be 7x7: ") + key);
      for (int i = 0; i < kSets; ++i) {
        if (!rows[i].is_array() || rows[i].size() != kSets)
          throw std::runtime_error(std::string("rule table must be 7x7: ") +
                                   key);
        for (int c = 0; c < kSets; ++c) out[i][c] = to_set(rows[i][c]);
      }
    };
    read("kp", t.kp);
    read("ki", t.ki);
    read("kd", t.kd);
  };
  RuleSet rs;
  read_tables("main", rs.main);
  read_tables("curvature", rs.curv);
  return rs;
}

std::array<double, 3> controller_outputs(const RuleTables& tables, double e,
                                         double de, int grid) {
  const double ec = clampu(e), dc = clampu(de);
  std::array<double, kSets> me, md;
  for (int k = 0; k < kSets; ++k) {
    me[k] = membership(k, ec);
    md[k] = membership(k, dc);
  }
  std::array<double, kSets> wp{}, wi{}, wd{};
  for (int i = 0; i < kSets; ++i) {
    if (me[i] <= 0.0) continue;
    for (int j = 0; j < kSets; ++j) {
      if (md[j] <= 0.0) continue;
      const double w = std::min(me[i], md[j]);
      wp[tables.kp[i][j]] = std::max(wp[tables.kp[i][j]], w);
      wi[tables.ki[i][j]] = std::max(wi[tables.ki[i][j]], w);
      wd[tables.kd[i][j]] = std::max(wd[tables.kd[i][j]], w);
    }
  }
  return {defuzzify(wp, grid), defuzzify(wi, grid), defuzzify(wd, grid)};
}

pid::GainVector fuzzy_gains(double x4, double dx4, double ec, double dec,
                            const FuzzyConfig& cfg) {
  const auto main = controller_outputs(cfg.rules.main, x4, dx4, cfg.grid);
  const auto curv = controller_outputs(cfg.rules.curv, ec, dec, cfg.grid);
  return cfg.bounds.from_unit(
      {main[0], main[1], main[2], curv[0], curv[1], curv[2]});
}

}  // namespace sacpid::fuzzy
