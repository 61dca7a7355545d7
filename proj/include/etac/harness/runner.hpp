#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "etac/errors.hpp"
#include "etac/harness/config.hpp"
#include "etac/identifier.hpp"
#include "etac/systems.hpp"
#include "etac/trigger_controller.hpp"

namespace etac::harness {

/// Simulation failure tagged with the scenario name.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

struct TrajectoryRow {
  double t = 0.0;
  Vector x, u, theta;
  double V = 0.0;
};

struct EventRow {
  std::size_t index = 0;
  double tau = 0.0;
  std::string cause;
  Vector theta_before, theta_after;
  int rank = 0;
  double residual = 0.0;
  bool skipped = false;
  double mu = 0.0;
};

struct RunSummary {
  std::string name;
  std::string system;
  std::string scheme;
  Vector theta_true;
  Vector final_theta_hat;
  std::optional<double> first_event_time;
  std::optional<double> first_guard_time;
  std::size_t event_count = 0;
  std::size_t guard_events = 0;
  std::optional<double> convergence_time;
  double sup_norm_x = 0.0;
  double final_norm_x = 0.0;
  std::size_t rank_deficient_updates = 0;
  std::size_t skipped_updates = 0;
  /// max over updates of |Z - G theta_true| / (1 + |G| |theta_true|).
  double max_gram_inconsistency = 0.0;
};

struct RunResult {
  ScenarioConfig config;
  ClosedLoopRun run;
  std::vector<TrajectoryRow> rows;
  std::vector<EventRow> events;
  RunSummary summary;
};

/// 0.001 spacing on [0, 0.1], 0.01 afterwards, t_end always included.
inline std::vector<double> sample_times(double t_end) {
  std::vector<double> ts;
  for (int i = 0; i <= 100; ++i) {
    const double t = i * 0.001;
    if (t > t_end + 1e-12) break;
    ts.push_back(t);
  }
  for (int j = 1;; ++j) {
    const double t = 0.1 + j * 0.01;
    if (t >= t_end - 1e-9) break;
    ts.push_back(t);
  }
  if (std::abs(ts.back() - t_end) > 1e-12) ts.push_back(t_end);
  else ts.back() = t_end;
  return ts;
}

/// Catalog entry (plant, nominal controller, defaults) for a config.
struct BuiltScenario {
  systems::PlantCatalogEntry entry;
  std::optional<NormTrigger> norm_trigger;
};

inline systems::LtiSpec lti_spec_from(const ScenarioConfig& c) {
  const std::size_t n = c.x0.size(), m = c.lti.m, l = c.theta_true.size();
  systems::LtiSpec s;
  s.A = Matrix::from_row_major(n, n, c.lti.A);
  s.B = Matrix::from_row_major(n, m, c.lti.B);
  for (std::size_t j = 0; j < l; ++j)
    s.C.push_back(Matrix::from_row_major(n, n, Vector(c.lti.C.begin() + j * n * n, c.lti.C.begin() + (j + 1) * n * n)));
  const Matrix K0 = Matrix::from_row_major(m, n, c.lti.K0);
  std::vector<Matrix> Kj;
  for (std::size_t j = 0; j < l && !c.lti.K.empty(); ++j)
    Kj.push_back(Matrix::from_row_major(m, n, Vector(c.lti.K.begin() + j * m * n, c.lti.K.begin() + (j + 1) * m * n)));
  s.K = [K0, Kj](const Vector& th) {
    Matrix K = K0;
    for (std::size_t j = 0; j < Kj.size(); ++j) K = K + Kj[j] * th[j];
    return K;
  };
  const double M = c.lti.M;
  s.M = [M](const Vector&) { return M; };
  s.a = c.lti.a;
  return s;
}

inline BuiltScenario build_scenario(const ScenarioConfig& c) {
  BuiltScenario b;
  if (c.system == "planar_s5") {
    b.entry = systems::example_planar();
  } else if (c.system == "disturbed_s6") {
    b.entry = systems::example_disturbed();
  } else if (c.system == "lti_custom") {
    systems::LtiEntry e = systems::example_lti(lti_spec_from(c));
    b.entry = std::move(e.entry);
    b.norm_trigger = e.trigger;
  } else {
    throw ConfigError("invalid 'system': unknown catalog name '" + c.system + "'");
  }
  return b;
}

inline UpdatePolicy policy_from(const ScenarioConfig& c) {
  if (c.tikhonov_eta > 0.0) return TikhonovPolicy{c.tikhonov_eta};
  if (c.eps > 0.0) return DeadZonePolicy{c.rank_tol, c.eps};
  return MinNormPolicy{c.rank_tol};
}

inline ClosedLoopSpec closed_loop_spec(const ScenarioConfig& c, const BuiltScenario& b) {
  ClosedLoopSpec spec;
  spec.plant = b.entry.plant;
  spec.controller = b.entry.controller;
  spec.trigger.T = c.T;
  spec.trigger.eps = c.eps;
  spec.trigger.a_fn = systems::quadratic_threshold(c.a_scale);
  if (b.norm_trigger) spec.trigger.kind = *b.norm_trigger;
  spec.window = {c.N_tilde, c.T};
  switch (c.identifier) {
    case IdentifierKind::Double: spec.identifier.variant = IdentifierVariant::Double; break;
    case IdentifierKind::Single: spec.identifier.variant = IdentifierVariant::Single; break;
    case IdentifierKind::AuxScalar:
      spec.identifier.variant = IdentifierVariant::Auxiliary;
      spec.identifier.auxiliary = systems::scalar_update_odes_6_13();
      break;
  }
  spec.identifier.policy = policy_from(c);
  spec.theta_true = c.theta_true;
  spec.theta_hat0 = c.theta_hat0;
  spec.x0 = c.x0;
  spec.t_end = c.t_end;
  spec.integrator = c.integrator;
  if (c.system == "disturbed_s6") spec.disturbance = systems::disturbance_sinusoidal({c.A1, c.A2, c.omega});
  return spec;
}

/// Runs one scenario. Deterministic: fixed integrator, no randomness.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
  RunResult out;
  out.config = cfg;
  try {
    validate(cfg);
    const BuiltScenario b = build_scenario(cfg);
    const ClosedLoopSpec spec = closed_loop_spec(cfg, b);
    const NominalController& ctrl = b.entry.controller;

    std::function<Vector(const Vector& th, const Vector& x)> u_of = ctrl.k;
    switch (cfg.comparator) {
      case SchemeKind::EventTriggered: out.run = run_closed_loop(spec); break;
      case SchemeKind::Nominal:
        out.run = simulate_continuous(spec.plant, nominal_feedback(ctrl, cfg.theta_true), cfg.theta_true, cfg.x0,
                                      cfg.t_end, cfg.integrator, spec.disturbance);
        break;
      case SchemeKind::ExtendedMatching: {
        const DynamicController dyn = systems::comparator_extended_matching(cfg.gamma, cfg.theta_hat0[0]);
        out.run = simulate_continuous(spec.plant, dyn, cfg.theta_true, cfg.x0, cfg.t_end, cfg.integrator,
                                      spec.disturbance);
        u_of = dyn.u;
        break;
      }
    }

    for (double t : sample_times(cfg.t_end)) {
      TrajectoryRow r;
      r.t = t;
      r.x = out.run.x_at(t);
      r.theta = out.run.theta_at(t);
      r.u = u_of(r.theta, r.x);
      r.V = ctrl.V(r.theta, r.x);
      out.rows.push_back(std::move(r));
    }

    RunSummary& s = out.summary;
    for (const EventRecord& e : out.run.events) {
      if (e.cause == EventCause::InitialEvent) continue;
      out.events.push_back({e.index, e.tau, to_string(e.cause), e.theta_before, e.theta_hat, e.report.rank,
                            e.report.residual, e.report.skipped, e.mu_time});
      const double scale = 1.0 + norm(e.gram.G) * norm(cfg.theta_true);
      s.max_gram_inconsistency = std::max(s.max_gram_inconsistency, e.gram.inconsistency(cfg.theta_true) / scale);
    }
    s.name = cfg.name;
    s.system = cfg.system;
    s.scheme = to_string(cfg.comparator);
    s.theta_true = cfg.theta_true;
    s.final_theta_hat = out.run.theta_at(cfg.t_end);
    const RunStats& st = out.run.stats;
    s.first_event_time = st.first_event_time;
    s.first_guard_time = st.first_guard_time;
    s.event_count = st.event_count;
    s.guard_events = st.guard_events;
    s.convergence_time = st.convergence_time;
    s.sup_norm_x = st.sup_norm_x;
    s.final_norm_x = st.final_norm_x;
    s.rank_deficient_updates = st.rank_deficient_updates;
    s.skipped_updates = st.skipped_updates;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError("scenario '" + cfg.name + "': " + e.what());
  }
  return out;
}

}  // namespace etac::harness
