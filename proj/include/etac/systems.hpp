#pragma once

// Catalog of worked plants: the planar two-parameter backstepping example, the
// scalar-parameter robustness plant with its sinusoidal disturbances and the
// extended-matching comparator, and user-specified LTI plants.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "etac/errors.hpp"
#include "etac/identifier.hpp"
#include "etac/linalg.hpp"
#include "etac/model.hpp"
#include "etac/trigger_controller.hpp"

namespace etac::systems {

/// Scenario defaults that come with a catalog plant.
struct CatalogDefaults {
  double T = 1.0;
  int N_tilde = 2;
  double a_scale = 0.05;
  double eps = 0.0;
  Vector theta_true;
  Vector theta_hat0;
  Vector x0;
};

struct PlantCatalogEntry {
  PlantModel plant;
  NominalController controller;
  /// Observability constant N: the estimate is exact after N events (x0 != 0).
  int N_h3 = 1;
  CatalogDefaults defaults;
};

/// a(x) = scale |x|^2.
inline std::function<double(const Vector&)> quadratic_threshold(double scale) {
  return [scale](const Vector& x) { return scale * dot(x, x); };
}

// ---- planar example -----------------------------------------------------------
//   x1' = th1 x1 + th2 x1^2 + x2,   x2' = u

namespace planar {

inline double s(const Vector& th, const Vector& x) { return x[1] + x[0] + th[0] * x[0] + th[1] * x[0] * x[0]; }

inline double V(const Vector& th, const Vector& x) {
  const double si = s(th, x);
  return 0.5 * x[0] * x[0] + 0.5 * si * si;
}

inline double k(const Vector& th, const Vector& x) {
  const double x1 = x[0], x2 = x[1];
  return -x1 - (1.0 + th[0] + 2.0 * th[1] * x1) * (x2 + th[0] * x1 + th[1] * x1 * x1) -
         (x2 + x1 + th[0] * x1 + th[1] * x1 * x1);
}

}  // namespace planar

inline PlantCatalogEntry example_planar() {
  PlantCatalogEntry e;
  e.plant.name = "planar_s5";
  e.plant.n = 2;
  e.plant.m = 1;
  e.plant.l = 2;
  e.plant.f = [](const Vector& x, const Vector& u) { return Vector{x[1], u[0]}; };
  e.plant.g = [](const Vector& x, const Vector&) { return Matrix{{x[0], x[0] * x[0]}, {0.0, 0.0}}; };
  e.controller.k = [](const Vector& th, const Vector& x) { return Vector{planar::k(th, x)}; };
  e.controller.V = planar::V;
  e.controller.Q = planar::V;
  e.N_h3 = 2;
  e.defaults = {1.0, 3, 0.05, 0.0, {0.5, -0.3}, {0.0, 0.0}, {1.0, 0.5}};
  return e;
}

// ---- robustness example ---------------------------------------------------------
//   x1' = (th + v1) x1^2 + x2 + v2,   x2' = u

namespace disturbed {

inline double s(double th, const Vector& x) {
  const double x1 = x[0];
  return x[1] + x1 + x1 * x1 * x1 + th * x1 * x1;
}

inline double V(double th, const Vector& x) {
  const double si = s(th, x);
  return 0.5 * x[0] * x[0] + 0.5 * si * si;
}

inline double k(double th, const Vector& x) {
  const double x1 = x[0], x2 = x[1];
  const double a = 1.0 + 2.0 * th * x1 + 3.0 * x1 * x1;
  return -x1 - a * (th * x1 * x1 + x2) - 0.5 * s(th, x) * (1.0 + a * a * (1.0 + x1 * x1 * x1 * x1));
}

/// Common factor of the extended-matching law.
inline double matching_term(double th, const Vector& x) {
  const double x1 = x[0];
  return x1 + s(th, x) * (1.0 + 2.0 * th * x1 + 3.0 * x1 * x1);
}

}  // namespace disturbed

struct DisturbanceSpec {
  double A1 = 0.0;
  double A2 = 0.0;
  double omega = 2.0;
};

inline PlantCatalogEntry example_disturbed() {
  PlantCatalogEntry e;
  e.plant.name = "disturbed_s6";
  e.plant.n = 2;
  e.plant.m = 1;
  e.plant.l = 1;
  e.plant.f = [](const Vector& x, const Vector& u) { return Vector{x[1], u[0]}; };
  e.plant.g = [](const Vector& x, const Vector&) { return Matrix{{x[0] * x[0]}, {0.0}}; };
  e.controller.k = [](const Vector& th, const Vector& x) { return Vector{disturbed::k(th[0], x)}; };
  e.controller.V = [](const Vector& th, const Vector& x) { return disturbed::V(th[0], x); };
  e.controller.Q = e.controller.V;
  e.N_h3 = 1;
  e.defaults = {3.0, 7, 0.05, 1e-6, {1.0}, {-4.0}, {1.0, 1.0}};
  return e;
}

/// v1 = A1 sin(omega t) multiplies x1^2; v2 = A2 sin(omega t) is additive.
inline Disturbance disturbance_sinusoidal(const DisturbanceSpec& d) {
  if (!(d.A1 >= 0.0) || !(d.A2 >= 0.0)) throw ParameterError("disturbance amplitudes must be >= 0");
  if (d.A1 == 0.0 && d.A2 == 0.0) return {};
  return [d](double t, const Vector& x) {
    const double sn = std::sin(d.omega * t);
    return Vector{d.A1 * sn * x[0] * x[0] + d.A2 * sn, 0.0};
  };
}

/// Conventional Lyapunov-based adaptive law (extended matching), as a smooth dynamic
/// controller whose state is the estimate.
inline DynamicController comparator_extended_matching(double gamma, double theta_hat0) {
  if (!(gamma > 0.0)) throw ParameterError("comparator: gamma must be > 0");
  DynamicController d;
  d.dim = 1;
  d.xc0 = {theta_hat0};
  d.state_is_estimate = true;
  d.dxc = [gamma](const Vector& th, const Vector& x) {
    return Vector{gamma * x[0] * x[0] * disturbed::matching_term(th[0], x)};
  };
  d.u = [gamma](const Vector& th, const Vector& x) {
    const double x1 = x[0];
    return Vector{disturbed::k(th[0], x) - gamma * x1 * x1 * x1 * x1 * disturbed::matching_term(th[0], x)};
  };
  return d;
}

/// Auxiliary ODE block realizing the scalar double integrals for windows starting at 0:
/// state (eta, zeta, z1..z7). eta and zeta equal the literal double integrals, i.e. twice
/// the snapshot-algebra Gram pair.
inline AuxiliaryIdentifier scalar_update_odes_6_13() {
  AuxiliaryIdentifier a;
  a.name = "aux_scalar";
  a.dim = 9;
  a.scale_vs_snapshot = 2.0;
  a.rhs = [](double, std::span<const double> x, std::span<const double> s, std::span<double> ds) {
    const double x1 = x[0], x2 = x[1];
    const double z1 = s[2], z2 = s[3], z3 = s[4], z4 = s[5], z5 = s[6], z6 = s[7], z7 = s[8];
    const double y1 = x1 - z7;
    ds[0] = 2.0 * z2 + 2.0 * z6 * z1 * z1 - 4.0 * z1 * z3;
    ds[1] = 2.0 * y1 * (z6 * z1 - z3) + 2.0 * z5 - 2.0 * z1 * z4;
    ds[2] = x1 * x1;
    ds[3] = z1 * z1;
    ds[4] = z1;
    ds[5] = y1;
    ds[6] = y1 * z1;
    ds[7] = 1.0;
    ds[8] = x2;
  };
  a.gram_from_origin = [](std::span<const double> s) { return GramSystem{Matrix{{s[0]}}, Vector{s[1]}}; };
  return a;
}

inline double eta_of(std::span<const double> aux) { return aux[0]; }
inline double zeta_of(std::span<const double> aux) { return aux[1]; }

// ---- LTI plants -----------------------------------------------------------------
//   x' = (A + sum th_j C_j) x + B u,   u = K(th) x

struct LtiSpec {
  Matrix A;
  Matrix B;
  std::vector<Matrix> C;
  std::function<Matrix(const Vector& theta)> K;
  std::function<double(const Vector& theta)> M;
  double a = 1.0;

  std::size_t n() const { return A.rows(); }
  std::size_t m() const { return B.cols(); }
  std::size_t l() const { return C.size(); }

  void validate() const {
    const std::size_t nn = n();
    if (!A.square() || B.rows() != nn) throw DimensionError("LtiSpec: A must be n x n and B n x m");
    if (C.empty()) throw DimensionError("LtiSpec: need at least one C_j");
    for (const auto& c : C)
      if (c.rows() != nn || c.cols() != nn) throw DimensionError("LtiSpec: each C_j must be n x n");
    if (!K || !M) throw ParameterError("LtiSpec: K and M must be provided");
    if (!(a > 0.0)) throw ParameterError("LtiSpec: a must be > 0");
  }
};

/// L*x = [C_1 x, ..., C_l x] (n x l).
inline Matrix lti_regressor(const LtiSpec& spec, std::span<const double> x) {
  Matrix out(spec.n(), spec.l());
  for (std::size_t j = 0; j < spec.l(); ++j) {
    const Vector cx = spec.C[j] * x;
    for (std::size_t i = 0; i < spec.n(); ++i) out(i, j) = cx[i];
  }
  return out;
}

/// y = x - A z - B w for the filters z' = x, w' = u.
inline Vector lti_filter_output(const LtiSpec& spec, const Vector& x, const Vector& z, const Vector& w) {
  return x - spec.A * z - spec.B * w;
}

struct LtiEntry {
  PlantCatalogEntry entry;
  LtiSpec spec;
  /// Norm trigger with gain sqrt(a + M(theta)^2).
  NormTrigger trigger;
};

/// Wires an LTI plant into the generic loop. With f = Ax + Bu and g = L*x the generic
/// accumulators satisfy B_acc = L*(int x) and x - z_acc = x - A int x - B int u, i.e. they
/// coincide with the filter construction, so the generic identifier is reused.
inline LtiEntry example_lti(LtiSpec spec) {
  spec.validate();
  LtiEntry out;
  out.spec = spec;
  PlantCatalogEntry& e = out.entry;
  e.plant.name = "lti_custom";
  e.plant.n = spec.n();
  e.plant.m = spec.m();
  e.plant.l = spec.l();
  e.plant.f = [spec](const Vector& x, const Vector& u) { return spec.A * x + spec.B * u; };
  e.plant.g = [spec](const Vector& x, const Vector&) { return lti_regressor(spec, x); };
  e.controller.k = [spec](const Vector& th, const Vector& x) {
    const Matrix K = spec.K(th);
    if (K.rows() != spec.m() || K.cols() != spec.n()) throw DimensionError("LtiSpec: K(theta) must be m x n");
    return K * x;
  };
  e.controller.V = [](const Vector&, const Vector& x) { return dot(x, x); };
  e.controller.Q = [spec](const Vector& th, const Vector& x) {
    const double m = spec.M(th);
    return m * m * dot(x, x);
  };
  e.N_h3 = 1;
  e.defaults = {1.0, 2, spec.a, 0.0, Vector(spec.l(), 0.0), Vector(spec.l(), 0.0), Vector(spec.n(), 1.0)};
  out.trigger = NormTrigger{spec.M, spec.a};
  return out;
}

/// Scalar instance x' = th x + u, K(th) = -(th + 1), M = 1, a = 1.
inline LtiSpec lti_scalar_instance() {
  LtiSpec s;
  s.A = Matrix{{0.0}};
  s.B = Matrix{{1.0}};
  s.C = {Matrix{{1.0}}};
  s.K = [](const Vector& th) { return Matrix{{-(th[0] + 1.0)}}; };
  s.M = [](const Vector&) { return 1.0; };
  s.a = 1.0;
  return s;
}

}  // namespace etac::systems
