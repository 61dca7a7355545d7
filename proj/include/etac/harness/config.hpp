#pragma once

// Scenario configuration: flat `key = value` text, one key per line, `#`
// comments, vectors and matrices as comma lists (matrices row-major).

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "etac/errors.hpp"
#include "etac/hybrid_ode.hpp"
#include "etac/identifier.hpp"
#include "etac/linalg.hpp"
#include "etac/systems.hpp"

namespace etac::harness {

enum class IdentifierKind { Double, Single, AuxScalar };
enum class SchemeKind { EventTriggered, Nominal, ExtendedMatching };

inline const char* to_string(IdentifierKind k) {
  switch (k) {
    case IdentifierKind::Double: return "double";
    case IdentifierKind::Single: return "single";
    case IdentifierKind::AuxScalar: return "aux_scalar";
  }
  return "?";
}

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::EventTriggered: return "none";
    case SchemeKind::Nominal: return "nominal";
    case SchemeKind::ExtendedMatching: return "extended_matching";
  }
  return "?";
}

/// LTI plant description for system = lti_custom. K(theta) = K0 + sum_j theta_j K_j.
struct LtiConfig {
  std::size_t m = 1;
  Vector A;                 // n*n
  Vector B;                 // n*m
  Vector C;                 // l blocks of n*n
  Vector K0;                // m*n
  Vector K;                 // l blocks of m*n (optional; zeros when empty)
  double M = 1.0;
  double a = 1.0;

  bool operator==(const LtiConfig&) const = default;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::string system;
  Vector theta_true;
  Vector theta_hat0;
  Vector x0;
  double T = 0.0;
  int N_tilde = 0;
  double a_scale = 0.0;
  double eps = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  double omega = 2.0;
  double t_end = 0.0;
  IntegratorConfig integrator;
  double rank_tol = kDefaultRankTol;
  /// > 0 selects the regularized update instead of the exact projection.
  double tikhonov_eta = 0.0;
  IdentifierKind identifier = IdentifierKind::Double;
  SchemeKind comparator = SchemeKind::EventTriggered;
  double gamma = 5.0;
  LtiConfig lti;

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& text, const std::string& key, int line) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty value for '" + key + "'", line);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError("'" + key + "': cannot parse '" + t + "' as a finite real", line);
  return v;
}

inline Vector parse_list(const std::string& text, const std::string& key, int line) {
  Vector out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(item, key, line));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'", line);
  return out;
}

inline int parse_int(const std::string& text, const std::string& key, int line) {
  const double v = parse_real(text, key, line);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "' must be an integer", line);
  return static_cast<int>(v);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

}  // namespace detail

inline const std::vector<std::string>& known_systems() {
  static const std::vector<std::string> names{"planar_s5", "disturbed_s6", "lti_custom"};
  return names;
}

/// Validates field ranges and cross-field dimensions; reports the first offending field.
inline void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("invalid '" + field + "': " + why);
  };
  if (c.system.empty()) fail("system", "missing");
  if (std::find(known_systems().begin(), known_systems().end(), c.system) == known_systems().end())
    fail("system", "unknown catalog name '" + c.system + "'");
  if (!(c.t_end > 0.0)) fail("t_end", "must be > 0");
  if (!(c.T > 0.0)) fail("T", "must be > 0");
  if (c.N_tilde < 1) fail("N_tilde", "must be >= 1");
  if (!(c.a_scale > 0.0)) fail("a_scale", "must be > 0");
  if (!(c.eps >= 0.0)) fail("eps", "must be >= 0");
  if (!(c.A1 >= 0.0)) fail("A1", "must be >= 0");
  if (!(c.A2 >= 0.0)) fail("A2", "must be >= 0");
  if (!(c.gamma > 0.0)) fail("gamma", "must be > 0");
  if (!(c.rank_tol >= 0.0)) fail("rank_tol", "must be >= 0");
  if (!(c.tikhonov_eta >= 0.0)) fail("tikhonov_eta", "must be >= 0");
  try {
    c.integrator.validate();
  } catch (const ParameterError& e) {
    fail("integrator", e.what());
  }

  std::size_t n = 2, l = 0;
  if (c.system == "planar_s5") l = 2;
  if (c.system == "disturbed_s6") l = 1;
  if (c.system == "lti_custom") {
    n = c.x0.size();
    l = c.theta_true.size();
    const std::size_t m = c.lti.m;
    if (m < 1) fail("lti_m", "must be >= 1");
    if (c.lti.A.size() != n * n) fail("lti_A", "expected n*n = " + std::to_string(n * n) + " entries");
    if (c.lti.B.size() != n * m) fail("lti_B", "expected n*m = " + std::to_string(n * m) + " entries");
    if (c.lti.C.size() != l * n * n) fail("lti_C", "expected l*n*n = " + std::to_string(l * n * n) + " entries");
    if (c.lti.K0.size() != m * n) fail("lti_K0", "expected m*n = " + std::to_string(m * n) + " entries");
    if (!c.lti.K.empty() && c.lti.K.size() != l * m * n)
      fail("lti_K", "expected l*m*n = " + std::to_string(l * m * n) + " entries");
    if (!(c.lti.M >= 1.0)) fail("lti_M", "must be >= 1");
    if (!(c.lti.a > 0.0)) fail("lti_a", "must be > 0");
    if (c.comparator == SchemeKind::ExtendedMatching) fail("comparator", "extended_matching needs disturbed_s6");
    if (c.A1 != 0.0 || c.A2 != 0.0) fail("A1", "disturbances are defined for disturbed_s6 only");
  }
  if (c.x0.size() != n) fail("x0", "expected " + std::to_string(n) + " entries");
  if (c.theta_true.size() != l || l == 0) fail("theta_true", "expected " + std::to_string(l) + " entries");
  if (c.theta_hat0.size() != l) fail("theta_hat0", "expected " + std::to_string(l) + " entries");
  if (c.identifier == IdentifierKind::AuxScalar && c.system != "disturbed_s6")
    fail("identifier", "aux_scalar is defined for disturbed_s6 only");
  if (c.comparator == SchemeKind::ExtendedMatching && c.system != "disturbed_s6")
    fail("comparator", "extended_matching needs disturbed_s6");
  if (c.system != "disturbed_s6" && (c.A1 != 0.0 || c.A2 != 0.0))
    fail("A1", "disturbances are defined for disturbed_s6 only");
}

/// Fills unset fields from the catalog entry named by `system`.
inline void apply_catalog_defaults(ScenarioConfig& c, const std::set<std::string>& given) {
  systems::CatalogDefaults d;
  if (c.system == "planar_s5") d = systems::example_planar().defaults;
  else if (c.system == "disturbed_s6") d = systems::example_disturbed().defaults;
  else d = {1.0, 2, 1.0, 0.0, {}, {}, {}};
  auto unset = [&](const char* k) { return !given.contains(k); };
  if (unset("T")) c.T = d.T;
  if (unset("N_tilde")) c.N_tilde = d.N_tilde;
  if (unset("a_scale")) c.a_scale = c.system == "lti_custom" ? c.lti.a : d.a_scale;
  if (unset("eps")) c.eps = d.eps;
  if (unset("theta_true") && !d.theta_true.empty()) c.theta_true = d.theta_true;
  if (unset("x0") && !d.x0.empty()) c.x0 = d.x0;
  if (unset("theta_hat0")) c.theta_hat0 = !d.theta_hat0.empty() ? d.theta_hat0 : Vector(c.theta_true.size(), 0.0);
}

/// Parses config text. Unknown or repeated keys are rejected with their line number.
inline ScenarioConfig parse_config(std::string_view text) {
  using detail::parse_int;
  using detail::parse_list;
  using detail::parse_real;
  ScenarioConfig c;
  std::set<std::string> given;

  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> setters{
      {"name", [&](const std::string& v, int) { c.name = v; }},
      {"system", [&](const std::string& v, int) { c.system = v; }},
      {"theta_true", [&](const std::string& v, int ln) { c.theta_true = parse_list(v, "theta_true", ln); }},
      {"theta_hat0", [&](const std::string& v, int ln) { c.theta_hat0 = parse_list(v, "theta_hat0", ln); }},
      {"x0", [&](const std::string& v, int ln) { c.x0 = parse_list(v, "x0", ln); }},
      {"T", [&](const std::string& v, int ln) { c.T = parse_real(v, "T", ln); }},
      {"N_tilde", [&](const std::string& v, int ln) { c.N_tilde = parse_int(v, "N_tilde", ln); }},
      {"a_scale", [&](const std::string& v, int ln) { c.a_scale = parse_real(v, "a_scale", ln); }},
      {"eps", [&](const std::string& v, int ln) { c.eps = parse_real(v, "eps", ln); }},
      {"A1", [&](const std::string& v, int ln) { c.A1 = parse_real(v, "A1", ln); }},
      {"A2", [&](const std::string& v, int ln) { c.A2 = parse_real(v, "A2", ln); }},
      {"omega", [&](const std::string& v, int ln) { c.omega = parse_real(v, "omega", ln); }},
      {"t_end", [&](const std::string& v, int ln) { c.t_end = parse_real(v, "t_end", ln); }},
      {"rel_tol", [&](const std::string& v, int ln) { c.integrator.rel_tol = parse_real(v, "rel_tol", ln); }},
      {"abs_tol", [&](const std::string& v, int ln) { c.integrator.abs_tol = parse_real(v, "abs_tol", ln); }},
      {"max_step", [&](const std::string& v, int ln) { c.integrator.max_step = parse_real(v, "max_step", ln); }},
      {"event_tol", [&](const std::string& v, int ln) { c.integrator.event_tol = parse_real(v, "event_tol", ln); }},
      {"rank_tol", [&](const std::string& v, int ln) { c.rank_tol = parse_real(v, "rank_tol", ln); }},
      {"tikhonov_eta", [&](const std::string& v, int ln) { c.tikhonov_eta = parse_real(v, "tikhonov_eta", ln); }},
      {"gamma", [&](const std::string& v, int ln) { c.gamma = parse_real(v, "gamma", ln); }},
      {"identifier",
       [&](const std::string& v, int ln) {
         if (v == "double") c.identifier = IdentifierKind::Double;
         else if (v == "single") c.identifier = IdentifierKind::Single;
         else if (v == "aux_scalar") c.identifier = IdentifierKind::AuxScalar;
         else throw ConfigError("'identifier' must be double, single or aux_scalar", ln);
       }},
      {"comparator",
       [&](const std::string& v, int ln) {
         if (v == "none") c.comparator = SchemeKind::EventTriggered;
         else if (v == "nominal") c.comparator = SchemeKind::Nominal;
         else if (v == "extended_matching") c.comparator = SchemeKind::ExtendedMatching;
         else throw ConfigError("'comparator' must be none, nominal or extended_matching", ln);
       }},
      {"lti_m", [&](const std::string& v, int ln) { c.lti.m = static_cast<std::size_t>(std::max(0, parse_int(v, "lti_m", ln))); }},
      {"lti_A", [&](const std::string& v, int ln) { c.lti.A = parse_list(v, "lti_A", ln); }},
      {"lti_B", [&](const std::string& v, int ln) { c.lti.B = parse_list(v, "lti_B", ln); }},
      {"lti_C", [&](const std::string& v, int ln) { c.lti.C = parse_list(v, "lti_C", ln); }},
      {"lti_K0", [&](const std::string& v, int ln) { c.lti.K0 = parse_list(v, "lti_K0", ln); }},
      {"lti_K", [&](const std::string& v, int ln) { c.lti.K = parse_list(v, "lti_K", ln); }},
      {"lti_M", [&](const std::string& v, int ln) { c.lti.M = parse_real(v, "lti_M", ln); }},
      {"lti_a", [&](const std::string& v, int ln) { c.lti.a = parse_real(v, "lti_a", ln); }},
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'", line);
    if (!given.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line);
    it->second(value, line);
  }
  if (!given.contains("system")) throw ConfigError("invalid 'system': missing");
  if (!given.contains("t_end")) throw ConfigError("invalid 't_end': missing");
  apply_catalog_defaults(c, given);
  validate(c);
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Canonical text form; parse_config(to_config_text(c)) == c.
inline std::string to_config_text(const ScenarioConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  o << "name = " << c.name << "\n";
  o << "system = " << c.system << "\n";
  o << "theta_true = " << fmt(c.theta_true) << "\n";
  o << "theta_hat0 = " << fmt(c.theta_hat0) << "\n";
  o << "x0 = " << fmt(c.x0) << "\n";
  o << "T = " << fmt(c.T) << "\n";
  o << "N_tilde = " << c.N_tilde << "\n";
  o << "a_scale = " << fmt(c.a_scale) << "\n";
  o << "eps = " << fmt(c.eps) << "\n";
  o << "A1 = " << fmt(c.A1) << "\n";
  o << "A2 = " << fmt(c.A2) << "\n";
  o << "omega = " << fmt(c.omega) << "\n";
  o << "t_end = " << fmt(c.t_end) << "\n";
  o << "rel_tol = " << fmt(c.integrator.rel_tol) << "\n";
  o << "abs_tol = " << fmt(c.integrator.abs_tol) << "\n";
  o << "max_step = " << fmt(c.integrator.max_step) << "\n";
  o << "event_tol = " << fmt(c.integrator.event_tol) << "\n";
  o << "rank_tol = " << fmt(c.rank_tol) << "\n";
  o << "tikhonov_eta = " << fmt(c.tikhonov_eta) << "\n";
  o << "identifier = " << to_string(c.identifier) << "\n";
  o << "comparator = " << to_string(c.comparator) << "\n";
  o << "gamma = " << fmt(c.gamma) << "\n";
  if (c.system == "lti_custom") {
    o << "lti_m = " << c.lti.m << "\n";
    o << "lti_A = " << fmt(c.lti.A) << "\n";
    o << "lti_B = " << fmt(c.lti.B) << "\n";
    o << "lti_C = " << fmt(c.lti.C) << "\n";
    o << "lti_K0 = " << fmt(c.lti.K0) << "\n";
    if (!c.lti.K.empty()) o << "lti_K = " << fmt(c.lti.K) << "\n";
    o << "lti_M = " << fmt(c.lti.M) << "\n";
    o << "lti_a = " << fmt(c.lti.a) << "\n";
  }
  return o.str();
}

}  // namespace etac::harness
