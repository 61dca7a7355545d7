#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "etac/errors.hpp"
#include "etac/harness/emit.hpp"
#include "etac/linalg.hpp"

namespace etac::harness {

struct ComparisonRow {
  double t = 0.0;
  double dx = 0.0;         // |x_a - x_b|
  double theta_err_a = 0.0; // |th_a - theta|
  double theta_err_b = 0.0;
};

struct WindowMetrics {
  double max_norm_x = 0.0;
  double min_norm_x = 0.0;
  /// Half peak-to-peak of |x| over the window.
  double half_range_norm_x = 0.0;
  double max_theta_err = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double max_dx = 0.0;
  /// max |x_a - x_b| for t >= from_time.
  double max_dx_after = 0.0;
  double from_time = 0.0;
  double overshoot_a = 0.0;
  double overshoot_b = 0.0;
  WindowMetrics terminal_a, terminal_b;
  double terminal_start = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline Vector lerp_at(const std::vector<double>& ts, const std::vector<Vector>& vs, double t) {
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - ts.begin());
  const double t0 = ts[k - 1], t1 = ts[k];
  const double s = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
  Vector out(vs[k].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - s) * vs[k - 1][i] + s * vs[k][i];
  return out;
}

inline bool same_grid(const SampledTrajectory& a, const SampledTrajectory& b) {
  if (a.t.size() != b.t.size()) return false;
  for (std::size_t i = 0; i < a.t.size(); ++i)
    if (std::abs(a.t[i] - b.t[i]) > 1e-12) return false;
  return true;
}

inline SampledTrajectory resample(const SampledTrajectory& s, const std::vector<double>& grid) {
  SampledTrajectory out;
  out.t = grid;
  out.theta_true = s.theta_true;
  out.convergence_time = s.convergence_time;
  for (double t : grid) {
    out.x.push_back(lerp_at(s.t, s.x, t));
    out.theta.push_back(lerp_at(s.t, s.theta, t));
  }
  return out;
}

}  // namespace detail

/// Pairwise comparison on the common grid. Mismatched grids are resampled onto the
/// coarser one by linear interpolation, with a warning. `from_time` defaults to the
/// later convergence time of the two runs (0 when neither has one).
inline ComparisonReport compare(SampledTrajectory a, SampledTrajectory b, double terminal_window = 5.0,
                                std::optional<double> from_time = std::nullopt) {
  if (a.t.empty() || b.t.empty()) throw PreconditionError("compare: empty trajectory");
  if (!a.x.empty() && !b.x.empty() && a.x.front().size() != b.x.front().size())
    throw DimensionError("compare: state dimensions differ");
  ComparisonReport rep;
  if (!detail::same_grid(a, b)) {
    const std::vector<double> grid = a.t.size() <= b.t.size() ? a.t : b.t;
    rep.warnings.push_back("time grids differ; resampled onto the coarser grid (" + std::to_string(grid.size()) +
                           " points) by linear interpolation");
    a = detail::resample(a, grid);
    b = detail::resample(b, grid);
  }
  rep.from_time = from_time ? *from_time : std::max(a.convergence_time.value_or(0.0), b.convergence_time.value_or(0.0));
  const double t_end = a.t.back();
  rep.terminal_start = t_end - terminal_window;
  auto err = [](const Vector& th, const Vector& truth) { return truth.empty() ? 0.0 : norm(th - truth); };

  bool first_a = true, first_b = true;
  auto fold = [](WindowMetrics& w, bool& first, double nx, double te) {
    if (first) {
      w.max_norm_x = w.min_norm_x = nx;
      first = false;
    }
    w.max_norm_x = std::max(w.max_norm_x, nx);
    w.min_norm_x = std::min(w.min_norm_x, nx);
    w.max_theta_err = std::max(w.max_theta_err, te);
  };

  for (std::size_t i = 0; i < a.t.size(); ++i) {
    ComparisonRow r;
    r.t = a.t[i];
    r.dx = norm(a.x[i] - b.x[i]);
    r.theta_err_a = err(a.theta[i], a.theta_true);
    r.theta_err_b = err(b.theta[i], b.theta_true);
    rep.max_dx = std::max(rep.max_dx, r.dx);
    if (r.t >= rep.from_time) rep.max_dx_after = std::max(rep.max_dx_after, r.dx);
    const double na = norm(a.x[i]), nb = norm(b.x[i]);
    rep.overshoot_a = std::max(rep.overshoot_a, na);
    rep.overshoot_b = std::max(rep.overshoot_b, nb);
    if (r.t >= rep.terminal_start - 1e-9) {
      fold(rep.terminal_a, first_a, na, r.theta_err_a);
      fold(rep.terminal_b, first_b, nb, r.theta_err_b);
    }
    rep.rows.push_back(r);
  }
  for (WindowMetrics* w : {&rep.terminal_a, &rep.terminal_b})
    w->half_range_norm_x = 0.5 * (w->max_norm_x - w->min_norm_x);
  return rep;
}

inline std::string comparison_csv(const ComparisonReport& rep) {
  using detail::fmt;
  std::string out = "t,dx,theta_err_a,theta_err_b\n";
  for (const auto& r : rep.rows)
    out += fmt(r.t) + "," + fmt(r.dx) + "," + fmt(r.theta_err_a) + "," + fmt(r.theta_err_b) + "\n";
  return out;
}

inline nlohmann::json comparison_json(const ComparisonReport& rep) {
  auto win = [](const WindowMetrics& w) {
    return nlohmann::json{{"max_norm_x", w.max_norm_x},
                          {"min_norm_x", w.min_norm_x},
                          {"half_range_norm_x", w.half_range_norm_x},
                          {"max_theta_err", w.max_theta_err}};
  };
  return {{"max_dx", rep.max_dx},
          {"from_time", rep.from_time},
          {"max_dx_after", rep.max_dx_after},
          {"overshoot_a", rep.overshoot_a},
          {"overshoot_b", rep.overshoot_b},
          {"terminal_start", rep.terminal_start},
          {"terminal_a", win(rep.terminal_a)},
          {"terminal_b", win(rep.terminal_b)},
          {"warnings", rep.warnings}};
}

}  // namespace etac::harness
