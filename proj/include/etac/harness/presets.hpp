#pragma once

// Named scenarios. The twenty robustness-study figures map onto nine runs:
// {nominal, comparator, event-triggered} x {no disturbance, A1 = 2, A2 = 2}.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "etac/harness/config.hpp"

namespace etac::harness {

struct PresetInfo {
  std::string name;
  std::string scenario;  // underlying run shared by a figure group
  std::string description;
};

inline const std::vector<PresetInfo>& preset_table() {
  static const std::vector<PresetInfo> table{
      {"fig1", "nominal_a0", "known-parameter feedback, no disturbance: state"},
      {"fig2", "comparator_a0", "extended-matching adaptive law, no disturbance: state"},
      {"fig3", "comparator_a0", "extended-matching adaptive law, no disturbance: estimation error"},
      {"fig4", "event_a0", "event-triggered scheme, no disturbance: state"},
      {"fig5", "event_a0", "event-triggered scheme, no disturbance: initial estimation error"},
      {"fig6", "event_a0", "event-triggered scheme, no disturbance: initial transient"},
      {"fig7", "nominal_a1", "known-parameter feedback, A1 = 2: state"},
      {"fig8", "comparator_a1", "extended-matching adaptive law, A1 = 2: state"},
      {"fig9", "comparator_a1", "extended-matching adaptive law, A1 = 2: estimation error"},
      {"fig10", "event_a1", "event-triggered scheme, A1 = 2: state"},
      {"fig11", "event_a1", "event-triggered scheme, A1 = 2: estimation error"},
      {"fig12", "event_a1", "event-triggered scheme, A1 = 2: initial transient"},
      {"fig13", "event_a1", "event-triggered scheme, A1 = 2: initial estimation error"},
      {"fig14", "nominal_a2", "known-parameter feedback, A2 = 2: state"},
      {"fig15", "comparator_a2", "extended-matching adaptive law, A2 = 2: state"},
      {"fig16", "comparator_a2", "extended-matching adaptive law, A2 = 2: estimation error"},
      {"fig17", "event_a2", "event-triggered scheme, A2 = 2: state"},
      {"fig18", "event_a2", "event-triggered scheme, A2 = 2: estimation error"},
      {"fig19", "event_a2", "event-triggered scheme, A2 = 2: initial transient"},
      {"fig20", "event_a2", "event-triggered scheme, A2 = 2: initial estimation error"},
      {"planar", "planar", "planar two-parameter example, exact projection update"},
      {"lti_scalar", "lti_scalar", "scalar LTI plant x' = th x + u with the norm trigger"},
  };
  return table;
}

namespace detail {

inline ScenarioConfig robustness_base(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.system = "disturbed_s6";
  c.theta_true = {1.0};
  c.theta_hat0 = {-4.0};
  c.x0 = {1.0, 1.0};
  c.T = 3.0;
  c.N_tilde = 7;
  c.a_scale = 1.0 / 20.0;
  c.eps = 1e-6;
  c.t_end = 20.0;
  c.gamma = 5.0;
  c.identifier = IdentifierKind::AuxScalar;
  return c;
}

}  // namespace detail

/// Expands a scenario name (see preset_table) into a validated config.
inline std::optional<ScenarioConfig> scenario_preset(const std::string& scenario, const std::string& name) {
  if (scenario == "planar") {
    ScenarioConfig c;
    c.name = name;
    c.system = "planar_s5";
    c.theta_true = {0.5, -0.3};
    c.theta_hat0 = {0.0, 0.0};
    c.x0 = {1.0, 0.5};
    c.T = 1.0;
    c.N_tilde = 3;
    c.a_scale = 0.05;
    c.t_end = 10.0;
    validate(c);
    return c;
  }
  if (scenario == "lti_scalar") {
    ScenarioConfig c;
    c.name = name;
    c.system = "lti_custom";
    c.theta_true = {2.0};
    c.theta_hat0 = {0.0};
    c.x0 = {1.0};
    c.T = 1.0;
    c.N_tilde = 2;
    c.lti = LtiConfig{1, {0.0}, {1.0}, {1.0}, {-1.0}, {-1.0}, 1.0, 1.0};
    c.a_scale = c.lti.a;
    c.t_end = 5.0;
    validate(c);
    return c;
  }
  const auto split = scenario.find('_');
  if (split == std::string::npos) return std::nullopt;
  const std::string scheme = scenario.substr(0, split);
  const std::string dist = scenario.substr(split + 1);
  ScenarioConfig c = detail::robustness_base(name);
  if (dist == "a1") c.A1 = 2.0;
  else if (dist == "a2") c.A2 = 2.0;
  else if (dist != "a0") return std::nullopt;
  if (scheme == "nominal") c.comparator = SchemeKind::Nominal;
  else if (scheme == "comparator") c.comparator = SchemeKind::ExtendedMatching;
  else if (scheme != "event") return std::nullopt;
  validate(c);
  return c;
}

inline std::optional<ScenarioConfig> preset(const std::string& name) {
  for (const auto& p : preset_table())
    if (p.name == name) return scenario_preset(p.scenario, name);
  return std::nullopt;
}

}  // namespace etac::harness
