#include "sacpid/perception.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace sacpid::percep {

namespace {

struct Span {
  int a, b;  // inclusive column range
};

std::vector<Span> row_spans(const BinaryImage& img, int row) {
  std::vector<Span> out;
  int c = 0;
  while (c < img.w) {
    if (img.at(c, row)) {
      const int a = c;
      while (c + 1 < img.w && img.at(c + 1, row)) ++c;
      out.push_back({a, c});
    }
    ++c;
  }
  return out;
}

// Least-squares quadratic col(row); returns coefficients {c0, c1, c2} of
// c0 + c1*r + c2*r^2.  n >= 3 required.
Eigen::Vector3d fit_quadratic(const std::vector<double>& rows,
                              const std::vector<double>& cols) {
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = rows[i];
    A(i, 2) = rows[i] * rows[i];
    y(i) = cols[i];
  }
  return A.colPivHouseholderQr().solve(y);
}

double eval_quadratic(const Eigen::Vector3d& q, double r) {
  return q(0) + r * (q(1) + r * q(2));
}

// Upward growth from a seed span, following per row the 8-connected span
// that overlaps the previous one best (ties: nearest centre).  A diverging
// branch therefore stays un-absorbed once it separates; a crossing bar is a
// single span, so it still balloons the width and trips the bridge.
Boundaries grow_region(const BinaryImage& img, Span seed, int seed_row) {
  Boundaries b;
  auto record = [&b](int row, int l, int r) {
    b.rows.push_back(row);
    b.left.push_back(l);
    b.right.push_back(r);
    b.bridged.push_back(0);
  };
  record(seed_row, seed.a, seed.b);
  Span cur = seed;
  for (int row = seed_row - 1; row >= 0; --row) {
    const Span* best = nullptr;
    int best_ov = -1;
    double best_dc = 0.0;
    const auto spans = row_spans(img, row);
    for (const Span& s : spans) {
      if (s.a > cur.b + 1 || s.b < cur.a - 1) continue;
      const int ov = std::min(s.b, cur.b) - std::max(s.a, cur.a) + 1;
      const double dc = std::abs(0.5 * (s.a + s.b) - 0.5 * (cur.a + cur.b));
      if (ov > best_ov || (ov == best_ov && dc < best_dc)) {
        best = &s;
        best_ov = ov;
        best_dc = dc;
      }
    }
    if (!best) break;
    cur = *best;
    record(row, cur.a, cur.b);
  }
  return b;
}

}  // namespace

PixelClass classify_pixel(const BinaryImage& img, int col, int row,
                          const PerceptionConfig& cfg) {
  int count = 0;
  for (int dr = -2; dr <= 2; ++dr)
    for (int dc = -2; dc <= 2; ++dc) {
      const int r = row + dr, c = col + dc;
      if (r >= 0 && r < img.h && c >= 0 && c < img.w) count += img.at(c, r);
    }
  const double tau = cfg.tau_mode == PerceptionConfig::TauMode::scaled
                         ? count * 255.0 / 25.0
                         : static_cast<double>(count);
  return (tau >= cfg.tau1 && tau <= cfg.tau2) ? PixelClass::fork
                                              : PixelClass::normal;
}

std::optional<Boundaries> region_boundaries(const BinaryImage& img) {
  // Seed: the ink span within the 8 bottom rows whose centre is nearest the
  // image centre column; ties prefer lower rows, then smaller columns.
  const double mid = (img.w - 1) / 2.0;
  int seed_row = -1;
  Span seed{0, 0};
  double best = 1e300;
  for (int row = img.h - 1; row >= std::max(0, img.h - 8); --row) {
    for (const Span& s : row_spans(img, row)) {
      const double d = std::abs(0.5 * (s.a + s.b) - mid);
      if (d < best - 1e-12) {
        best = d;
        seed_row = row;
        seed = s;
      }
    }
  }
  if (seed_row < 0) return std::nullopt;
  return grow_region(img, seed, seed_row);
}

std::optional<Boundaries> extract_line(const BinaryImage& img,
                                       const PerceptionConfig& cfg) {
  auto grown = region_boundaries(img);
  if (!grown) return std::nullopt;

  Boundaries out;
  auto record = [&out](int row, int l, int r, bool bridged) {
    out.rows.push_back(row);
    out.left.push_back(l);
    out.right.push_back(r);
    out.bridged.push_back(bridged ? 1 : 0);
  };

  // The tau band flags the sparse gap between diverging branches, so it is
  // evaluated at the row's centre pixel: solid ink on a normal line sits
  // far above the band, a fork gap falls into it.
  auto is_fork = [&](int l, int r, int row) {
    return classify_pixel(img, (l + r) / 2, row, cfg) == PixelClass::fork;
  };
  // A perpendicular crossing never empties the centre pixel; the span
  // balloon catches it instead.  The reference is the narrowest recent
  // width: perspective only thins the line upward, so genuine widening is
  // abrupt, and the narrowest row is the least contaminated one when a
  // divergence has already crept into the tail.
  auto tail_min_width = [&]() {
    const int n = static_cast<int>(out.size());
    const int fit_n = std::min(n, cfg.bridge_fit_rows);
    int ref = img.w;
    for (int i = n - fit_n; i < n; ++i)
      ref = std::min(ref, out.right[i] - out.left[i] + 1);
    return ref;
  };
  auto ballooned = [&](int l, int r) {
    if (out.size() < 3) return false;
    const int ref = tail_min_width();
    const int width = r - l + 1;
    return width > cfg.balloon_factor * ref && width >= ref + cfg.balloon_slack;
  };

  // Walk the grown entries; on a fork trigger, drop the forky entry, fit the
  // recent boundary history and extrapolate synthetic entries upward until
  // the line re-appears where predicted (or the gap budget runs out).  After
  // re-acquisition the region is grown afresh from the matched span, and the
  // scan continues to catch further forks.
  std::size_t idx = 0;
  Boundaries src = *grown;
  // Each re-acquisition must land strictly above the previous one; without
  // this the rewind could pop a re-acquired row and the next bridge would
  // match the same span forever.
  int reacquire_floor = img.h;
  while (idx < src.size()) {
    const int row = src.rows[idx];
    const int l = src.left[idx], r = src.right[idx];
    if (!is_fork(l, r, row) && !ballooned(l, r)) {
      record(row, l, r, false);
      ++idx;
      continue;
    }
    // fork (or crossing balloon) detected at this entry
    if (out.size() < 3) {
      // no history to bridge from; the rows next to the seed are the line
      // itself (ragged raster corners can graze the tau band), so keep them
      record(row, l, r, false);
      ++idx;
      continue;
    }
    // A diverging branch widens the span gradually, so the trigger usually
    // fires a few rows late; rewind the contaminated tail so the fit sees
    // the line, not the widening ramp.  The minimum is re-taken after each
    // pop: as the window slides below the ramp it keeps exposing cleaner
    // reference rows.
    {
      int popped = 0;
      while (static_cast<int>(out.size()) > 3 && popped < cfg.bridge_max_gap &&
             out.right.back() - out.left.back() + 1 >= tail_min_width() + 2) {
        out.rows.pop_back();
        out.left.pop_back();
        out.right.pop_back();
        out.bridged.pop_back();
        ++popped;
      }
    }
    const int n = static_cast<int>(out.size());
    const int fit_n = std::min(n, cfg.bridge_fit_rows);
    std::vector<double> rs, ls, rs2;
    for (int i = n - fit_n; i < n; ++i) {
      rs.push_back(out.rows[i]);
      ls.push_back(out.left[i]);
      rs2.push_back(out.right[i]);
    }
    const auto ql = fit_quadratic(rs, ls);
    const auto qr = fit_quadratic(rs, rs2);

    bool resumed = false;
    int rr = out.rows[n - 1] - 1;
    for (int gap = 1; gap <= cfg.bridge_max_gap && rr >= 0; ++gap, --rr) {
      const int lp = std::clamp(
          static_cast<int>(std::lround(eval_quadratic(ql, rr))), 0, img.w - 1);
      const int rp = std::clamp(
          static_cast<int>(std::lround(eval_quadratic(qr, rr))), 0, img.w - 1);
      Span match{};
      bool found = false;
      if (rr < reacquire_floor)
        for (const Span& s : row_spans(img, rr))
          // both edges near prediction AND the width agrees -- a branch
          // edge can graze one prediction while the span is far too wide
          if (std::abs(s.a - lp) <= cfg.bridge_tol &&
              std::abs(s.b - rp) <= cfg.bridge_tol &&
              std::abs((s.b - s.a) - (rp - lp)) <= cfg.bridge_tol) {
            match = s;
            found = true;
            break;
          }
      if (found) {
        reacquire_floor = rr;
        // Regrow from the re-acquired span.  Its first row already passed
        // the geometric match, so accept it without re-classification --
        // this also guarantees the scan advances.
        src = grow_region(img, match, rr);
        record(src.rows[0], src.left[0], src.right[0], false);
        idx = 1;
        resumed = true;
        break;
      }
      record(rr, lp, rp, true);
    }
    if (!resumed) break;
  }
  if (out.rows.empty()) return std::nullopt;
  return out;
}

std::vector<int> centerline(const Boundaries& b) {
  std::vector<int> c(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) c[i] = (b.left[i] + b.right[i] + 1) / 2;
  return c;
}

std::optional<FivePoints> five_points(const BinaryImage& img,
                                      const PerceptionConfig& cfg) {
  const auto b = extract_line(img, cfg);
  if (!b) return std::nullopt;
  const auto mid = centerline(*b);
  const int r_bottom = b->rows.front();
  const int r_top = b->rows.back();
  FivePoints fp;
  for (int k = 0; k < 5; ++k) {
    const double rf = r_top + k / 4.0 * (r_bottom - r_top);
    const int row = static_cast<int>(std::floor(rf + 0.5));
    const std::size_t i = static_cast<std::size_t>(r_bottom - row);
    fp.row[k] = row;
    fp.col[k] = mid[i];
    fp.x[k] = 2.0 * fp.col[k] / (img.w - 1) - 1.0;
    fp.y[k] = 2.0 * fp.row[k] / (img.h - 1) - 1.0;
  }
  return fp;
}

void CurvatureEstimator::reset() {
  last_ = 0.0;
  c_l_ = 0.0;
  valid_ = false;
}

double CurvatureEstimator::update(const BinaryImage& top, double v, double omega) {
  const auto b = extract_line(top, params_.perception);
  if (!b || b->size() < 3) {
    valid_ = false;
    return last_;
  }
  const auto mid = centerline(*b);
  std::vector<double> rs(mid.size()), cs(mid.size());
  for (std::size_t i = 0; i < mid.size(); ++i) {
    rs[i] = b->rows[i];
    cs[i] = mid[i];
  }
  const auto q = fit_quadratic(rs, cs);
  const double r0 = b->rows.front();  // nearest-to-robot row
  const double slope = q(1) + 2.0 * q(2) * r0;
  const double kappa_px = 2.0 * q(2) / std::pow(1.0 + slope * slope, 1.5);
  // columns and the lateral axis both grow toward the robot's left
  c_l_ = kappa_px / params_.m_per_px;
  const double c_r = omega / std::max(std::abs(v), params_.v_floor);
  const double e_c = std::clamp(c_r - c_l_, -params_.e_c_max, params_.e_c_max);
  last_ = e_c;
  valid_ = true;
  return e_c;
}

std::array<double, 13> build_state(const FivePoints& fp, double e_c, double v,
                                   double w, const StateScale& sc) {
  std::array<double, 13> s{};
  for (int k = 0; k < 5; ++k) {
    s[2 * k] = fp.x[k];
    s[2 * k + 1] = fp.y[k];
  }
  s[10] = std::clamp(e_c / sc.e_c_max, -1.0, 1.0);
  s[11] = std::clamp(2.0 * (v - sc.v_lo) / (sc.v_hi - sc.v_lo) - 1.0, -1.0, 1.0);
  s[12] = std::clamp(w / sc.w_max, -1.0, 1.0);
  return s;
}

}  // namespace sacpid::percep
