#pragma once

// Hybrid closed loop: certainty-equivalence feedback with a piecewise-constant
// estimate, Lyapunov-level event trigger with dwell cap T, and an identifier
// update at every event.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "etac/errors.hpp"
#include "etac/hybrid_ode.hpp"
#include "etac/identifier.hpp"
#include "etac/linalg.hpp"
#include "etac/model.hpp"

namespace etac {

inline constexpr double kZeroStateTol = 1e-12;
inline constexpr double kConvergenceTol = 1e-5;
inline constexpr std::size_t kMaxEvents = 1'000'000;

/// Level trigger V(theta_hat, x(t)) = Q(theta_hat, x(tau)) + a(x(tau)) + eps.
struct LevelTrigger {};

/// LTI norm trigger |x(t)| = |x(tau)| sqrt(a + M(theta_hat)^2).
struct NormTrigger {
  std::function<double(const Vector& theta)> M;
  double a = 1.0;
};

struct TriggerConfig {
  double T = 1.0;
  std::function<double(const Vector& x)> a_fn;
  double eps = 0.0;
  std::variant<LevelTrigger, NormTrigger> kind = LevelTrigger{};

  void validate() const {
    if (!(T > 0.0)) throw ParameterError("TriggerConfig: T must be > 0");
    if (!(eps >= 0.0)) throw ParameterError("TriggerConfig: eps must be >= 0");
    if (std::holds_alternative<LevelTrigger>(kind) && !a_fn)
      throw ParameterError("TriggerConfig: level trigger needs a_fn");
    if (const auto* nt = std::get_if<NormTrigger>(&kind); nt && (!nt->M || !(nt->a > 0.0)))
      throw ParameterError("TriggerConfig: norm trigger needs M and a > 0");
  }
};

inline Vector control(const NominalController& ctrl, const Vector& theta_hat, const Vector& x) {
  return ctrl.k(theta_hat, x);
}

/// Level-trigger margin V(th, x_now) - Q(th, x_tau) - a(x_tau) - eps.
inline double guard(const NominalController& ctrl, const TriggerConfig& trig, const Vector& theta_hat,
                    const Vector& x_at_tau, const Vector& x_now) {
  return ctrl.V(theta_hat, x_now) - ctrl.Q(theta_hat, x_at_tau) - trig.a_fn(x_at_tau) - trig.eps;
}

/// Norm-trigger margin |x_now| - |x_tau| sqrt(a + M(th)^2).
inline double norm_guard(const NormTrigger& trig, const Vector& theta_hat, const Vector& x_at_tau,
                         const Vector& x_now) {
  const double m = trig.M(theta_hat);
  return norm(x_now) - norm(x_at_tau) * std::sqrt(trig.a + m * m);
}

/// tau_{i+1} = min(tau_i + T, r_i), with r_i absolute (+inf when the trigger never fires).
inline double next_event_time(double tau_i, double T, double r_i) { return std::min(tau_i + T, r_i); }

enum class EventCause { InitialEvent, GuardCrossed, DwellCapT };

inline const char* to_string(EventCause c) {
  switch (c) {
    case EventCause::InitialEvent: return "InitialEvent";
    case EventCause::GuardCrossed: return "GuardCrossed";
    case EventCause::DwellCapT: return "DwellCapT";
  }
  return "?";
}

struct EventRecord {
  std::size_t index = 0;
  double tau = 0.0;
  Vector x_at_tau;
  Vector theta_before;
  /// Estimate in force on [tau_i, tau_{i+1}).
  Vector theta_hat;
  Snapshot snapshot;
  EventCause cause = EventCause::InitialEvent;
  double mu_time = 0.0;
  /// Pair used for the update, in the identifier's own scale convention.
  GramSystem gram;
  /// Double-integral pair from the snapshot algebra (always computed; diagnostics).
  GramSystem snapshot_gram;
  UpdateReport report;
};

/// Estimate held constant on [t_start, t_end).
struct ThetaPiece {
  double t_start;
  double t_end;
  Vector theta;
};

struct RunStats {
  std::optional<double> first_event_time;
  std::optional<double> first_guard_time;
  std::size_t event_count = 0;
  std::size_t guard_events = 0;
  std::optional<double> convergence_time;
  double sup_norm_x = 0.0;
  double final_norm_x = 0.0;
  std::size_t rank_deficient_updates = 0;
  std::size_t skipped_updates = 0;
};

/// Dense trajectory of the full augmented state plus the event history.
struct ClosedLoopRun {
  std::size_t n = 0, m = 0, l = 0;
  std::size_t state_dim = 0;
  double t_end = 0.0;
  Vector theta_true;
  std::vector<DenseSegment> segments;
  std::vector<EventRecord> events;
  std::vector<ThetaPiece> staircase;
  /// Set when the estimate is a continuous state (conventional adaptive laws).
  std::optional<std::size_t> theta_state_offset;
  RunStats stats;

  Vector state_at(double t) const { return evaluate_trajectory(segments, t); }

  Vector x_at(double t) const {
    Vector y = state_at(t);
    y.resize(n);
    return y;
  }

  Vector theta_at(double t) const {
    if (theta_state_offset) {
      const Vector y = state_at(t);
      return Vector(y.begin() + *theta_state_offset, y.begin() + *theta_state_offset + l);
    }
    auto it = std::upper_bound(staircase.begin(), staircase.end(), t,
                               [](double tv, const ThetaPiece& p) { return tv < p.t_start; });
    if (it != staircase.begin()) --it;
    return it->theta;
  }
};

struct ClosedLoopSpec {
  PlantModel plant;
  NominalController controller;
  TriggerConfig trigger;
  WindowSpec window;
  IdentifierConfig identifier;
  Vector theta_true;
  Vector theta_hat0;
  Vector x0;
  double t_end = 1.0;
  IntegratorConfig integrator;
  Disturbance disturbance;  // optional
};

namespace detail {

inline void check_dims(const PlantModel& p, const Vector& theta_true, const Vector& x0) {
  if (!p.f || !p.g) throw PreconditionError("plant " + p.name + " has no f/g");
  if (x0.size() != p.n) throw DimensionError("x0 has length " + std::to_string(x0.size()) + ", plant n = " + std::to_string(p.n));
  if (theta_true.size() != p.l)
    throw DimensionError("theta has length " + std::to_string(theta_true.size()) + ", plant l = " + std::to_string(p.l));
}

inline void finish_stats(ClosedLoopRun& run) {
  double sup = 0.0;
  Vector probe(run.state_dim);
  for (const auto& seg : run.segments) {
    for (double s : {0.0, 0.25, 0.5, 0.75}) {
      seg.evaluate(seg.t_start() + s * (seg.t_end() - seg.t_start()), probe);
      sup = std::max(sup, norm(std::span<const double>(probe.data(), run.n)));
    }
  }
  const Vector xf = run.x_at(run.t_end);
  sup = std::max(sup, norm(xf));
  run.stats.sup_norm_x = sup;
  run.stats.final_norm_x = norm(xf);

  auto close = [&](const Vector& th) { return norm(th - run.theta_true) <= kConvergenceTol; };
  if (!run.theta_state_offset && !run.staircase.empty()) {
    std::optional<double> conv;
    for (auto it = run.staircase.rbegin(); it != run.staircase.rend(); ++it) {
      if (!close(it->theta)) break;
      conv = it->t_start;
    }
    run.stats.convergence_time = conv;
  }
}

}  // namespace detail

/// Simulates the event-triggered adaptive closed loop on [0, t_end].
inline ClosedLoopRun run_closed_loop(const ClosedLoopSpec& spec) {
  const PlantModel& plant = spec.plant;
  detail::check_dims(plant, spec.theta_true, spec.x0);
  if (spec.theta_hat0.size() != plant.l) throw DimensionError("theta_hat0 length differs from plant l");
  if (!(spec.t_end > 0.0)) throw ParameterError("t_end must be > 0");
  spec.trigger.validate();
  spec.window.validate();
  spec.integrator.validate();

  const std::size_t n = plant.n, l = plant.l;
  const std::size_t acc_dim = IdentifierState::packed_size(n, l);
  const bool use_aux = spec.identifier.variant == IdentifierVariant::Auxiliary;
  const AuxiliaryIdentifier& aux = spec.identifier.auxiliary;
  if (use_aux && (!aux.rhs || !aux.gram_from_origin))
    throw PreconditionError("auxiliary identifier selected but not provided");
  const std::size_t aux_dim = use_aux ? aux.dim : 0;
  const std::size_t dim = n + acc_dim + aux_dim;

  ClosedLoopRun run;
  run.n = n;
  run.m = plant.m;
  run.l = l;
  run.state_dim = dim;
  run.t_end = spec.t_end;
  run.theta_true = spec.theta_true;

  Vector theta_hat = spec.theta_hat0;

  OdeRhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const Vector x(y.begin(), y.begin() + n);
    const Vector u = spec.controller.k(theta_hat, x);
    const Vector fx = plant.f(x, u);
    const Matrix gx = plant.g(x, u);
    const Vector gt = gx * spec.theta_true;
    for (std::size_t i = 0; i < n; ++i) dy[i] = fx[i] + gt[i];
    if (spec.disturbance) {
      const Vector d = spec.disturbance(t, x);
      for (std::size_t i = 0; i < n; ++i) dy[i] += d[i];
    }
    accumulator_rhs_packed(fx, gx, x, y.subspan(n, acc_dim), dy.subspan(n, acc_dim));
    if (use_aux) aux.rhs(t, y.first(n), y.subspan(n + acc_dim, aux_dim), dy.subspan(n + acc_dim, aux_dim));
  };

  auto snapshot_of = [&](double t, const Vector& y) {
    return Snapshot{t, Vector(y.begin(), y.begin() + n),
                    IdentifierState::unpack(std::span<const double>(y).subspan(n, acc_dim), n, l)};
  };

  Vector y(dim, 0.0);
  std::copy(spec.x0.begin(), spec.x0.end(), y.begin());
  double tau = 0.0;

  EventRecord first;
  first.index = 0;
  first.tau = 0.0;
  first.x_at_tau = spec.x0;
  first.theta_before = theta_hat;
  first.theta_hat = theta_hat;
  first.snapshot = snapshot_of(0.0, y);
  first.cause = EventCause::InitialEvent;
  run.events.push_back(std::move(first));
  std::vector<double> taus{0.0};

  double h_hint = 0.0;
  const double eps_t = spec.integrator.event_tol;

  while (tau < spec.t_end) {
    const Vector x_tau(y.begin(), y.begin() + n);
    const bool x_is_zero = norm(x_tau) <= kZeroStateTol;

    GuardFn guard_fn;
    if (const auto* nt = std::get_if<NormTrigger>(&spec.trigger.kind)) {
      if (!x_is_zero) {
        const double level = norm(x_tau) * std::sqrt(nt->a + std::pow(nt->M(theta_hat), 2));
        guard_fn = [n, level](double, std::span<const double> s) { return norm(s.first(n)) - level; };
      }
    } else if (!x_is_zero || spec.trigger.eps > 0.0) {
      const double level =
          spec.controller.Q(theta_hat, x_tau) + spec.trigger.a_fn(x_tau) + spec.trigger.eps;
      const Vector th = theta_hat;
      guard_fn = [&, th, level](double, std::span<const double> s) {
        return spec.controller.V(th, Vector(s.begin(), s.begin() + n)) - level;
      };
    }

    const double dwell_end = tau + spec.trigger.T;
    double horizon = std::min(dwell_end, spec.t_end);
    bool immediate = false;
    if (guard_fn && guard_fn(tau, y) >= 0.0) {
      // Already at or past the level: fire one event_tol later rather than at tau itself.
      immediate = true;
      horizon = std::min(tau + eps_t, spec.t_end);
      guard_fn = nullptr;
    }

    OdeProblem problem{dim, rhs, tau, y};
    IntegrateOptions opts;
    opts.h_init = h_hint;
    IntegrationResult ir = integrate_until_event(problem, spec.integrator, guard_fn, horizon, opts);
    h_hint = ir.h_next;
    run.segments.insert(run.segments.end(), std::make_move_iterator(ir.trajectory.begin()),
                        std::make_move_iterator(ir.trajectory.end()));

    double t_next;
    EventCause cause;
    if (ir.event()) {
      t_next = std::get<EventAt>(ir.outcome).t;
      cause = EventCause::GuardCrossed;
    } else if (immediate) {
      if (!(horizon < spec.t_end)) {
        run.staircase.push_back({tau, spec.t_end, theta_hat});
        y = ir.final_state();
        break;
      }
      t_next = horizon;
      cause = EventCause::GuardCrossed;
    } else if (dwell_end <= spec.t_end) {
      t_next = dwell_end;
      cause = EventCause::DwellCapT;
    } else {
      run.staircase.push_back({tau, spec.t_end, theta_hat});
      y = ir.final_state();
      break;
    }
    y = ir.final_state();
    run.staircase.push_back({tau, t_next, theta_hat});

    // Update at tau_{i+1} over the window [mu_{i+1}, tau_{i+1}].
    const std::size_t i = run.events.size() - 1;
    taus.push_back(t_next);
    const MuIndex mu = mu_index(taus, i, spec.window);
    EventRecord rec;
    rec.index = i + 1;
    rec.tau = t_next;
    rec.x_at_tau = Vector(y.begin(), y.begin() + n);
    rec.theta_before = theta_hat;
    rec.snapshot = snapshot_of(t_next, y);
    rec.cause = cause;
    rec.mu_time = mu.mu_time;
    const Snapshot& mu_snap = run.events[mu.event_index].snapshot;
    rec.snapshot_gram = gram_from_snapshots(rec.snapshot, mu_snap);
    switch (spec.identifier.variant) {
      case IdentifierVariant::Double: rec.gram = rec.snapshot_gram; break;
      case IdentifierVariant::Single: rec.gram = gram_single_integral(rec.snapshot, mu_snap); break;
      case IdentifierVariant::Auxiliary:
        // The auxiliary block integrates from t = 0 only; later windows use the
        // snapshot algebra rescaled to the block's convention.
        rec.gram = mu.mu_time == 0.0
                       ? aux.gram_from_origin(std::span<const double>(y).subspan(n + acc_dim, aux_dim))
                       : rec.snapshot_gram.scaled(aux.scale_vs_snapshot);
        break;
    }
    UpdateOutcome up = update_estimate(theta_hat, rec.gram, spec.identifier.policy);
    rec.report = up.report;
    if (up.report.skipped) ++run.stats.skipped_updates;
    else if (up.report.rank < static_cast<int>(l)) ++run.stats.rank_deficient_updates;
    theta_hat = std::move(up.theta);
    rec.theta_hat = theta_hat;

    if (!run.stats.first_event_time) run.stats.first_event_time = t_next;
    if (cause == EventCause::GuardCrossed) {
      ++run.stats.guard_events;
      if (!run.stats.first_guard_time) run.stats.first_guard_time = t_next;
    }
    ++run.stats.event_count;
    run.events.push_back(std::move(rec));
    if (run.events.size() > kMaxEvents)
      throw RunawayError("event storm: more than " + std::to_string(kMaxEvents) + " events before t = " +
                         std::to_string(t_next));
    tau = t_next;
  }
  if (run.staircase.empty() || run.staircase.back().t_end < spec.t_end)
    run.staircase.push_back({tau, spec.t_end, theta_hat});

  detail::finish_stats(run);
  return run;
}

/// Smooth dynamic feedback u = u(xc, x), xc' = dxc(xc, x). A static law has dim = 0.
struct DynamicController {
  std::size_t dim = 0;
  Vector xc0;
  std::function<Vector(const Vector& xc, const Vector& x)> u;
  std::function<Vector(const Vector& xc, const Vector& x)> dxc;
  /// The controller state is itself a parameter estimate of length l.
  bool state_is_estimate = false;
};

/// Known-parameter loop u = k(theta, x).
inline DynamicController nominal_feedback(const NominalController& ctrl, Vector theta) {
  DynamicController d;
  d.u = [ctrl, theta](const Vector&, const Vector& x) { return ctrl.k(theta, x); };
  return d;
}

/// Integrates a smooth (event-free) closed loop.
inline ClosedLoopRun simulate_continuous(const PlantModel& plant, const DynamicController& dyn,
                                         const Vector& theta_true, const Vector& x0, double t_end,
                                         const IntegratorConfig& cfg, const Disturbance& disturbance = {}) {
  detail::check_dims(plant, theta_true, x0);
  if (!(t_end > 0.0)) throw ParameterError("t_end must be > 0");
  if (dyn.xc0.size() != dyn.dim) throw DimensionError("controller initial state has wrong length");
  const std::size_t n = plant.n;
  const std::size_t dim = n + dyn.dim;

  OdeRhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const Vector x(y.begin(), y.begin() + n);
    const Vector xc(y.begin() + n, y.end());
    const Vector u = dyn.u(xc, x);
    const Vector dx = plant.dynamics(x, u, theta_true);
    for (std::size_t i = 0; i < n; ++i) dy[i] = dx[i];
    if (disturbance) {
      const Vector d = disturbance(t, x);
      for (std::size_t i = 0; i < n; ++i) dy[i] += d[i];
    }
    if (dyn.dim > 0) {
      const Vector dc = dyn.dxc(xc, x);
      std::copy(dc.begin(), dc.end(), dy.begin() + n);
    }
  };

  Vector y0(x0);
  y0.insert(y0.end(), dyn.xc0.begin(), dyn.xc0.end());
  OdeProblem problem{dim, rhs, 0.0, y0};
  IntegrationResult ir = integrate_until_event(problem, cfg, nullptr, t_end);

  ClosedLoopRun run;
  run.n = n;
  run.m = plant.m;
  run.l = plant.l;
  run.state_dim = dim;
  run.t_end = t_end;
  run.theta_true = theta_true;
  run.segments = std::move(ir.trajectory);
  if (dyn.state_is_estimate) {
    if (dyn.dim != plant.l) throw DimensionError("estimate-valued controller state must have length l");
    run.theta_state_offset = n;
  } else {
    run.staircase.push_back({0.0, t_end, theta_true});
  }
  EventRecord first;
  first.x_at_tau = x0;
  first.theta_hat = dyn.state_is_estimate ? dyn.xc0 : theta_true;
  first.theta_before = first.theta_hat;
  run.events.push_back(std::move(first));
  detail::finish_stats(run);
  return run;
}

}  // namespace etac
