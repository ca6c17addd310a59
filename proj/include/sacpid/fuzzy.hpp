#pragma once
#include <array>
#include <string>

#include "sacpid/pid.hpp"

namespace sacpid::fuzzy {

// Seven uniform triangular sets NB..PB on [-1,1]: centers -1 + k/3,
// half-width 1/3.  They form a partition of unity over the universe.
inline constexpr int kSets = 7;
double membership(int set, double x);

// Rule tables hold output set indices 0..6, indexed [error][error_delta].
struct RuleTables {
  std::array<std::array<int, kSets>, kSets> kp, ki, kd;
};

// Default main-branch profile.  The x4 error enters the PID law directly,
// so the tables shape gain magnitudes (all even in the input signs):
//   kp[i][j] = max(|v_i|, |v_j|)      stronger correction as error/trend grow
//   ki[i][j] = clip(2|v_i| - 3)       integral from 0 up to the range top
//   kd[i][j] = |v_j| - 3              mild damping that follows the trend
// with v = index - 3, results shifted back into set indices 0..6.
RuleTables default_tables();

// Auxiliary-branch profile.  A positive curvature error e_c = c_r - c_l
// means the robot already turns harder than the line bends, so the
// correction must oppose the error: kp and ki mirror the main magnitudes
// into the negative half of the (symmetric) gain ranges.
RuleTables curvature_tables();

struct RuleSet {
  RuleTables main = default_tables();
  RuleTables curv = curvature_tables();
};

// JSON file with top-level "main" and "curvature" objects, each holding
// "kp"/"ki"/"kd" 7x7 arrays of set names ("NB".."PB") or indices 0..6;
// throws std::runtime_error on malformed input.
RuleSet load_rules(const std::string& path);

struct FuzzyConfig {
  RuleSet rules;
  pid::GainBounds bounds;
  int grid = 2001;  // centroid discretization points over [-1,1]
};

// One Mamdani controller: min-AND rule strength, max aggregation of clipped
// sets, centroid defuzzification.  Returns normalized (kp,ki,kd) in [-1,1].
std::array<double, 3> controller_outputs(const RuleTables& tables, double e,
                                         double de, int grid = 2001);

// Two controllers: (x4,dx4) feeds the main gains, (ec,dec) the curvature
// gains; outputs are affine-mapped onto the configured ranges.
pid::GainVector fuzzy_gains(double x4, double dx4, double ec, double dec,
                            const FuzzyConfig& cfg);

}  // namespace sacpid::fuzzy
