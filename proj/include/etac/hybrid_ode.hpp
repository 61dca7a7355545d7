#pragma once

// Dormand-Prince 5(4) integration with Hairer's fourth-order continuous
// extension, plus first-up-crossing localization of a scalar guard on the
// dense interpolant.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "etac/errors.hpp"
#include "etac/linalg.hpp"

namespace etac {

/// dy/dt written into `dydt` (already sized to the state dimension).
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct OdeProblem {
  std::size_t dimension = 0;
  OdeRhs rhs;
  double t0 = 0.0;
  Vector y0;
};

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  /// Width of the bracketing interval when a guard root has been localized.
  double event_tol = 1e-9;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) || !(event_tol > 0.0))
      throw ParameterError("IntegratorConfig: all tolerances must be strictly positive");
    if (event_tol > max_step) throw ParameterError("IntegratorConfig: event_tol must not exceed max_step");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

/// One accepted step with its interpolant. Valid on [t_start, t_end]; t_end can
/// be earlier than t_start + h when the step was cut at an event.
class DenseSegment {
 public:
  DenseSegment() = default;
  DenseSegment(double t_start, double h, Vector y_start, Vector y_end, std::array<Vector, 3> coeffs)
      : t_start_(t_start), t_end_(t_start + h), h_(h), y_start_(std::move(y_start)),
        y_end_(std::move(y_end)), c_(std::move(coeffs)) {}

  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  double step() const noexcept { return h_; }
  std::size_t dimension() const noexcept { return y_start_.size(); }

  void truncate(double t_end) { t_end_ = std::clamp(t_end, t_start_, t_start_ + h_); }

  /// Interpolated state; exact step values are returned at both ends of the step.
  void evaluate(double t, std::span<double> out) const {
    const double s = (t - t_start_) / h_;
    if (s <= 0.0) {
      std::copy(y_start_.begin(), y_start_.end(), out.begin());
      return;
    }
    if (s >= 1.0) {
      std::copy(y_end_.begin(), y_end_.end(), out.begin());
      return;
    }
    const double s1 = 1.0 - s;
    for (std::size_t i = 0; i < y_start_.size(); ++i) {
      const double ydiff = y_end_[i] - y_start_[i];
      out[i] = y_start_[i] + s * (ydiff + s1 * (c_[0][i] + s * (c_[1][i] + s1 * c_[2][i])));
    }
  }

  Vector evaluate(double t) const {
    Vector y(dimension());
    evaluate(t, y);
    return y;
  }

  double evaluate_component(double t, std::size_t i) const {
    const double s = (t - t_start_) / h_;
    if (s <= 0.0) return y_start_[i];
    if (s >= 1.0) return y_end_[i];
    const double s1 = 1.0 - s;
    const double ydiff = y_end_[i] - y_start_[i];
    return y_start_[i] + s * (ydiff + s1 * (c_[0][i] + s * (c_[1][i] + s1 * c_[2][i])));
  }

  const Vector& y_start() const noexcept { return y_start_; }
  const Vector& y_end() const noexcept { return y_end_; }

 private:
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  double h_ = 1.0;
  Vector y_start_, y_end_;
  std::array<Vector, 3> c_;
};

/// Evaluates a piecewise dense trajectory (segments sorted, contiguous).
inline Vector evaluate_trajectory(std::span<const DenseSegment> segments, double t) {
  if (segments.empty()) throw PreconditionError("evaluate_trajectory: empty trajectory");
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double tv, const DenseSegment& s) { return tv < s.t_start(); });
  if (it != segments.begin()) --it;
  return it->evaluate(std::min(t, it->t_end()));
}

struct StepResult {
  Vector y_next;
  double h_taken = 0.0;
  double h_next = 0.0;
  DenseSegment segment;
  double err_est = 0.0;
  int rejections = 0;
};

/// Embedded 5(4) pair with FSAL. Holds per-run scratch; one instance per thread.
class DormandPrince45 {
 public:
  DormandPrince45(const OdeProblem& problem, IntegratorConfig config)
      : problem_(problem), config_(config) {
    config_.validate();
    if (!problem_.rhs) throw PreconditionError("OdeProblem: rhs is empty");
    if (problem_.y0.size() != problem_.dimension)
      throw DimensionError("OdeProblem: dimension does not match y0");
    for (auto& k : k_) k.assign(problem_.dimension, 0.0);
    stage_.assign(problem_.dimension, 0.0);
  }

  /// Takes one accepted step from (t, y), starting with trial size h and shrinking on
  /// rejection.
  StepResult step(double t, std::span<const double> y, double h) {
    if (!(h > 0.0)) throw PreconditionError("DormandPrince45::step: h must be > 0");
    const std::size_t n = problem_.dimension;
    if (!fsal_valid_ || fsal_t_ != t) {
      problem_.rhs(t, y, k_[0]);
      fsal_t_ = t;
    }
    StepResult res;
    res.y_next.assign(n, 0.0);
    Vector err(n);
    h = std::min(h, config_.max_step);
    for (;;) {
      const double h_min = 1e-14 * std::max(1.0, std::abs(t));
      if (h < h_min)
        throw IntegrationError("step size underflow at t = " + std::to_string(t) + " (h = " +
                               std::to_string(h) + ")");
      stage(y, h, {kA21}, 1, t + kC2 * h);
      stage(y, h, {kA31, kA32}, 2, t + kC3 * h);
      stage(y, h, {kA41, kA42, kA43}, 3, t + kC4 * h);
      stage(y, h, {kA51, kA52, kA53, kA54}, 4, t + kC5 * h);
      stage(y, h, {kA61, kA62, kA63, kA64, kA65}, 5, t + h);
      for (std::size_t i = 0; i < n; ++i)
        res.y_next[i] = y[i] + h * (kB1 * k_[0][i] + kB3 * k_[2][i] + kB4 * k_[3][i] +
                                    kB5 * k_[4][i] + kB6 * k_[5][i]);
      problem_.rhs(t + h, res.y_next, k_[6]);

      double sum = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        err[i] = h * (kE1 * k_[0][i] + kE3 * k_[2][i] + kE4 * k_[3][i] + kE5 * k_[4][i] +
                      kE6 * k_[5][i] + kE7 * k_[6][i]);
        const double sc =
            config_.abs_tol + config_.rel_tol * std::max(std::abs(y[i]), std::abs(res.y_next[i]));
        const double r = err[i] / sc;
        sum += r * r;
        finite = finite && std::isfinite(res.y_next[i]);
      }
      const double e = finite ? std::sqrt(sum / static_cast<double>(std::max<std::size_t>(n, 1))) : kInf;

      if (e <= 1.0) {
        const double fac = e == 0.0 ? kMaxGrow : std::clamp(kSafety * std::pow(e, -0.2), kMinShrink, kMaxGrow);
        res.h_taken = h;
        res.h_next = std::min(h * (res.rejections > 0 ? std::min(fac, 1.0) : fac), config_.max_step);
        res.err_est = e;
        res.segment = make_segment(t, h, y, res.y_next);
        std::swap(k_[0], k_[6]);
        fsal_valid_ = true;
        fsal_t_ = t + h;
        return res;
      }
      ++res.rejections;
      h *= std::isfinite(e) ? std::max(kMinShrink, kSafety * std::pow(e, -0.2)) : 0.1;
    }
  }

  /// Initial step guess (Hairer, Norsett, Wanner II.4).
  double initial_step(double t, std::span<const double> y) {
    const std::size_t n = problem_.dimension;
    Vector f0(n), f1(n), y1(n);
    problem_.rhs(t, y, f0);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = config_.abs_tol + config_.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, config_.max_step);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h0 * f0[i];
    problem_.rhs(t + h0, y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = config_.abs_tol + config_.rel_tol * std::abs(y[i]);
      d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / n) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, config_.max_step});
  }

  const IntegratorConfig& config() const noexcept { return config_; }

 private:
  void stage(std::span<const double> y, double h, std::initializer_list<double> a, std::size_t out,
             double ts) {
    const std::size_t n = problem_.dimension;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      std::size_t j = 0;
      for (double aij : a) acc += aij * k_[j++][i];
      stage_[i] = y[i] + h * acc;
    }
    problem_.rhs(ts, stage_, k_[out]);
  }

  DenseSegment make_segment(double t, double h, std::span<const double> y, const Vector& y1) const {
    const std::size_t n = problem_.dimension;
    std::array<Vector, 3> c{Vector(n), Vector(n), Vector(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const double ydiff = y1[i] - y[i];
      const double bspl = h * k_[0][i] - ydiff;
      c[0][i] = bspl;
      c[1][i] = ydiff - h * k_[6][i] - bspl;
      c[2][i] = h * (kD1 * k_[0][i] + kD3 * k_[2][i] + kD4 * k_[3][i] + kD5 * k_[4][i] +
                     kD6 * k_[5][i] + kD7 * k_[6][i]);
    }
    return DenseSegment(t, h, Vector(y.begin(), y.end()), y1, std::move(c));
  }

  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kSafety = 0.9, kMinShrink = 0.2, kMaxGrow = 5.0;

  static constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
  static constexpr double kA21 = 1.0 / 5;
  static constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
  static constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
  static constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                          kA54 = -212.0 / 729;
  static constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                          kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
  static constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                          kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
  static constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                          kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
  static constexpr double kD1 = -12715105075.0 / 11282082432.0, kD3 = 87487479700.0 / 32700410799.0,
                          kD4 = -10690763975.0 / 1880347072.0, kD5 = 701980252875.0 / 199316789632.0,
                          kD6 = -1453857185.0 / 822651844.0, kD7 = 69997945.0 / 29380423.0;

  OdeProblem problem_;
  IntegratorConfig config_;
  std::array<Vector, 7> k_;
  Vector stage_;
  bool fsal_valid_ = false;
  double fsal_t_ = 0.0;
};

/// Signed trigger margin; an event is the first up-crossing of zero.
using GuardFn = std::function<double(double t, std::span<const double> y)>;

struct EventAt {
  double t;
  Vector y;
};
struct ReachedTmax {
  Vector y;
};
using IntegrationOutcome = std::variant<EventAt, ReachedTmax>;

struct IntegrationResult {
  IntegrationOutcome outcome;
  std::vector<DenseSegment> trajectory;
  /// Step size proposal for a restart from the final time.
  double h_next = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  bool event() const noexcept { return std::holds_alternative<EventAt>(outcome); }
  const Vector& final_state() const {
    return event() ? std::get<EventAt>(outcome).y : std::get<ReachedTmax>(outcome).y;
  }
};

struct IntegrateOptions {
  /// Trial step; 0 selects one automatically.
  double h_init = 0.0;
  /// Accept guard(t0, y0) >= 0 and look for the next up-crossing only.
  bool allow_nonnegative_start = false;
  /// Interior samples per step used to catch a crossing pair inside one step.
  int guard_samples = 4;
};

/// Integrates from (t0, y0) until the guard first crosses zero from below, or to t_max.
/// An empty guard integrates straight to t_max.
inline IntegrationResult integrate_until_event(const OdeProblem& problem, const IntegratorConfig& config,
                                               const GuardFn& guard, double t_max,
                                               IntegrateOptions opts = {}) {
  if (!(t_max >= problem.t0)) throw PreconditionError("integrate_until_event: t_max < t0");
  DormandPrince45 stepper(problem, config);
  IntegrationResult result{ReachedTmax{problem.y0}, {}, 0.0, 0, 0};

  double t = problem.t0;
  Vector y = problem.y0;
  double g_prev = 0.0;
  if (guard) {
    g_prev = guard(t, y);
    if (g_prev >= 0.0 && !opts.allow_nonnegative_start)
      throw PreconditionError("integrate_until_event: guard is already non-negative at t0 = " +
                              std::to_string(t));
  }
  if (t_max == t) {
    result.h_next = opts.h_init > 0.0 ? opts.h_init : config.max_step;
    return result;
  }
  double h = opts.h_init > 0.0 ? opts.h_init : stepper.initial_step(t, y);
  Vector probe(problem.dimension);

  while (t < t_max) {
    const double remaining = t_max - t;
    double trial = std::min(h, config.max_step);
    bool last = false;
    if (trial * 1.01 >= remaining) {
      if (remaining <= config.max_step) {
        trial = remaining;
        last = true;
      } else {
        trial = 0.5 * remaining;
      }
    }
    StepResult sr = stepper.step(t, y, trial);
    result.rejected_steps += sr.rejections;
    ++result.accepted_steps;
    last = last && sr.h_taken == trial;
    const double t_next = last ? t_max : t + sr.h_taken;

    if (guard) {
      // Scan the step for the first sub-interval whose right end is non-negative.
      double a = t;
      double ga = g_prev;
      bool bracketed = false;
      double b = t_next;
      for (int k = 1; k <= opts.guard_samples; ++k) {
        const double tk = k == opts.guard_samples ? t_next : t + (t_next - t) * k / opts.guard_samples;
        sr.segment.evaluate(tk, probe);
        const double gk = guard(tk, probe);
        if (ga < 0.0 && gk >= 0.0) {
          b = tk;
          bracketed = true;
          break;
        }
        a = tk;
        ga = gk;
      }
      if (bracketed) {
        while (b - a > config.event_tol) {
          const double m = 0.5 * (a + b);
          sr.segment.evaluate(m, probe);
          if (guard(m, probe) >= 0.0)
            b = m;
          else
            a = m;
        }
        sr.segment.truncate(b);
        Vector y_event = sr.segment.evaluate(b);
        result.trajectory.push_back(std::move(sr.segment));
        result.outcome = EventAt{b, std::move(y_event)};
        result.h_next = sr.h_next;
        return result;
      }
      g_prev = ga;
    }

    y = std::move(sr.y_next);
    t = t_next;
    if (!last) h = sr.h_next;
    result.trajectory.push_back(std::move(sr.segment));
  }
  result.outcome = ReachedTmax{y};
  result.h_next = h;
  return result;
}

}  // namespace etac
