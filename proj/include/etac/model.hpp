#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "etac/linalg.hpp"

namespace etac {

/// dx/dt = f(x, u) + g(x, u) theta with theta in R^l constant and unknown.
/// Contract: f(0, 0) = 0 and g(0, 0) = 0.
struct PlantModel {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t l = 0;
  std::function<Vector(const Vector& x, const Vector& u)> f;
  std::function<Matrix(const Vector& x, const Vector& u)> g;

  /// f(x, u) + g(x, u) theta.
  Vector dynamics(const Vector& x, const Vector& u, const Vector& theta) const {
    Vector dx = f(x, u);
    const Vector gt = g(x, u) * theta;
    for (std::size_t i = 0; i < n; ++i) dx[i] += gt[i];
    return dx;
  }
};

/// Known-parameter design: feedback k(theta, x) with k(theta, 0) = 0 and the pair
/// V_theta <= Q_theta bounding the nominal closed loop, V(x(t)) <= Q(x(0)).
struct NominalController {
  std::function<Vector(const Vector& theta, const Vector& x)> k;
  std::function<double(const Vector& theta, const Vector& x)> V;
  std::function<double(const Vector& theta, const Vector& x)> Q;
};

/// Additive, time-varying disturbance on the true plant only; the identifier never sees it.
using Disturbance = std::function<Vector(double t, const Vector& x)>;

}  // namespace etac
