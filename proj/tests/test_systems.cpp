#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "etac/systems.hpp"
#include "etac/trigger_controller.hpp"
#include "oracles.hpp"

using namespace etac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("planar catalog entry") {
  const auto e = systems::example_planar();
  CHECK(e.N_h3 == 2);
  CHECK(norm(e.plant.g({0.0, 3.0}, {7.0})) == 0.0);
  CHECK(norm(e.plant.f({0.0, 0.0}, {0.0})) == 0.0);
  CHECK_THAT(e.controller.V({0.0, 0.0}, {1.0, 0.0}), WithinAbs(1.0, 1e-15));
  CHECK(e.controller.k({0.4, 0.9}, {0.0, 0.0})[0] == 0.0);
}

TEST_CASE("robustness catalog entry") {
  const auto e = systems::example_disturbed();
  CHECK(e.N_h3 == 1);
  CHECK_THAT(e.plant.dynamics({1.0, 1.0}, {0.0}, {1.0})[0], WithinAbs(2.0, 1e-15));
  CHECK_THAT(e.controller.V({1.0}, {1.0, 1.0}), WithinAbs(8.5, 1e-15));
  CHECK_THAT(e.controller.V({-4.0}, {1.0, 1.0}), WithinAbs(1.0, 1e-15));
  CHECK(systems::disturbance_sinusoidal({0.0, 0.0, 2.0}) == nullptr);
  const auto d = systems::disturbance_sinusoidal({2.0, 1.0, 2.0});
  CHECK_THAT(d(0.3, {0.5, 0.0})[0], WithinAbs(std::sin(0.6) * (2.0 * 0.25 + 1.0), 1e-15));
  CHECK_THROWS_AS(systems::disturbance_sinusoidal({-1.0, 0.0, 2.0}), ParameterError);
}

TEST_CASE("extended-matching comparator") {
  const auto c = systems::comparator_extended_matching(5.0, -4.0);
  CHECK(c.xc0 == Vector{-4.0});
  CHECK(c.dxc({0.0}, {0.0, 0.0})[0] == 0.0);
  CHECK(c.u({0.3}, {0.0, 0.0})[0] == 0.0);
  CHECK_THAT(c.dxc({0.0}, {1.0, 0.0})[0], WithinAbs(9.0 * 5.0, 1e-13));
  CHECK_THROWS_AS(systems::comparator_extended_matching(0.0, 0.0), ParameterError);
}

TEST_CASE("planar coercivity bound") {
  const auto e = systems::example_planar();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double rho : {0.5, 1.0, 2.0}) {
    for (int k = 0; k < 2000; ++k) {
      const Vector th{rho * u(rng) / std::sqrt(2.0), rho * u(rng) / std::sqrt(2.0)};
      const Vector x{3.0 * u(rng), 3.0 * u(rng)};
      const double M = e.controller.V(th, x);
      CHECK(norm(x) <= (3.0 + rho) * std::sqrt(2.0 * M) + 2.0 * rho * M + 1e-12);
    }
  }
}

TEST_CASE("planar quadratic sandwich") {
  const auto e = systems::example_planar();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double rho : {0.5, 1.0}) {
    for (double R : {1.0, 3.0}) {
      const double c = 1.0 + rho + rho * R;
      const double K1 = 1.0 / (4.0 * c * c + 2.0), K2 = c * c + 0.5;
      for (int k = 0; k < 2000; ++k) {
        const Vector th{rho * u(rng) / std::sqrt(2.0), rho * u(rng) / std::sqrt(2.0)};
        Vector x{u(rng), u(rng)};
        const double s = R * std::abs(u(rng)) / std::max(norm(x), 1e-12);
        x = s * x;
        const double V = e.controller.V(th, x), nx2 = dot(x, x);
        CHECK(K1 * nx2 <= V + 1e-14);
        CHECK(V <= K2 * nx2 + 1e-14);
      }
    }
  }
}

TEST_CASE("robustness input-to-state inequality") {
  // dV/dt along the disturbed loop by central differences of V in x.
  const auto e = systems::example_disturbed();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vector th{1.0};
  for (int k = 0; k < 2000; ++k) {
    const Vector x{2.0 * u(rng), 2.0 * u(rng)};
    const double v1 = 2.0 * u(rng), v2 = 2.0 * u(rng);
    const Vector uu = e.controller.k(th, x);
    Vector dx = e.plant.dynamics(x, uu, th);
    dx[0] += v1 * x[0] * x[0] + v2;
    double dV = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      dV += (e.controller.V(th, xp) - e.controller.V(th, xm)) / (2.0 * h) * dx[i];
    }
    const double V = e.controller.V(th, x);
    const double bound = -V + (2.0 + v1 * v1) / 4.0 * v1 * v1 + v2 * v2;
    CHECK(dV <= bound + 1e-5 * (1.0 + std::abs(bound) + std::abs(dV)));
  }
}

TEST_CASE("auxiliary scalar block agrees with the general identifier") {
  const auto e = systems::example_disturbed();
  ClosedLoopSpec spec;
  spec.plant = e.plant;
  spec.controller = e.controller;
  spec.trigger.T = 3.0;
  spec.trigger.a_fn = systems::quadratic_threshold(0.05);
  spec.window = {7, 3.0};
  spec.identifier.variant = IdentifierVariant::Auxiliary;
  spec.identifier.auxiliary = systems::scalar_update_odes_6_13();
  spec.theta_true = {1.0};
  spec.theta_hat0 = {-4.0};
  spec.x0 = {1.0, 1.0};
  spec.t_end = 4.0;
  const ClosedLoopRun run = run_closed_loop(spec);
  REQUIRE(run.events.size() >= 2);

  const auto& aux = spec.identifier.auxiliary;
  CHECK(aux.scale_vs_snapshot == 2.0);
  for (std::size_t i = 1; i < run.events.size(); ++i) {
    const auto& ev = run.events[i];
    REQUIRE(ev.mu_time == 0.0);
    const double eta = ev.gram.G(0, 0), zeta = ev.gram.Z[0];
    CHECK_THAT(eta, WithinRel(2.0 * ev.snapshot_gram.G(0, 0), 1e-6));
    CHECK_THAT(zeta, WithinRel(2.0 * ev.snapshot_gram.Z[0], 1e-6));
    CHECK_THAT(zeta / eta, WithinAbs(1.0, 1e-5));
    const auto ref = oracle::window_quadrature(run, spec.plant, spec.controller, 0.0, ev.tau);
    CHECK_THAT(eta, WithinRel(ref.G(0, 0), 1e-6));
  }
  // All auxiliary states start at zero.
  const Vector y0 = run.state_at(0.0);
  for (std::size_t k = y0.size() - aux.dim; k < y0.size(); ++k) CHECK(y0[k] == 0.0);
}

TEST_CASE("LTI wiring") {
  systems::LtiSpec s;
  s.A = Matrix(2, 2);
  s.B = Matrix{{0.0}, {1.0}};
  s.C = {Matrix::identity(2)};
  s.K = [](const Vector&) { return Matrix{{-1.0, -1.0}}; };
  s.M = [](const Vector&) { return 1.0; };
  const Matrix L = systems::lti_regressor(s, Vector{0.3, -0.7});
  CHECK(L.rows() == 2);
  CHECK(L.cols() == 1);
  CHECK(L.column(0) == Vector{0.3, -0.7});

  const auto entry = systems::example_lti(systems::lti_scalar_instance());
  CHECK(entry.entry.plant.n == 1);
  CHECK(entry.entry.controller.k({2.0}, {1.0})[0] == -3.0);
  CHECK(entry.entry.controller.Q({2.0}, {2.0}) == 4.0);

  s.C = {Matrix(3, 3)};
  CHECK_THROWS_AS(systems::example_lti(s), DimensionError);
}

TEST_CASE("LTI filter output matches the generic accumulator innovation") {
  const systems::LtiSpec spec = systems::lti_scalar_instance();
  const auto entry = systems::example_lti(spec);
  ClosedLoopSpec cl;
  cl.plant = entry.entry.plant;
  cl.controller = entry.entry.controller;
  cl.trigger.T = 1.0;
  cl.trigger.kind = entry.trigger;
  cl.window = {2, 1.0};
  cl.theta_true = {2.0};
  cl.theta_hat0 = {0.0};
  cl.x0 = {1.0};
  cl.t_end = 3.0;
  const ClosedLoopRun run = run_closed_loop(cl);
  for (const auto& ev : run.events) {
    const auto& st = ev.snapshot.state;
    // z_filt = int x = B_acc (C = 1), w_filt = int u, and y = x - A z_filt - B w_filt.
    const Vector z_filt{st.B(0, 0)};
    const double w_filt = st.z[0];  // z_acc = int (A x + B u) = int u when A = 0
    const Vector y = systems::lti_filter_output(spec, ev.x_at_tau, z_filt, {w_filt});
    CHECK_THAT(y[0], WithinAbs(ev.x_at_tau[0] - st.z[0], 1e-15));
  }
  CHECK(norm(run.theta_at(3.0) - cl.theta_true) <= 1e-6);
}
