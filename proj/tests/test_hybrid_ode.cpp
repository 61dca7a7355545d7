#include <catch_amalgamated.hpp>

#include <cmath>

#include "etac/hybrid_ode.hpp"

using namespace etac;
using Catch::Matchers::WithinAbs;

namespace {

OdeProblem scalar(std::function<double(double, double)> f, double y0) {
  return {1, [f](double t, std::span<const double> y, std::span<double> dy) { dy[0] = f(t, y[0]); }, 0.0, {y0}};
}

double final_value(const IntegrationResult& r) { return r.final_state()[0]; }

}  // namespace

TEST_CASE("constant solution is reproduced exactly") {
  const auto r = integrate_until_event(scalar([](double, double) { return 0.0; }, 2.5), {}, nullptr, 3.0);
  CHECK(final_value(r) == 2.5);
  for (const auto& seg : r.trajectory) CHECK(seg.evaluate(0.5 * (seg.t_start() + seg.t_end()))[0] == 2.5);
}

TEST_CASE("exponential decay within tolerance") {
  IntegratorConfig cfg;
  const auto r = integrate_until_event(scalar([](double, double y) { return -y; }, 1.0), cfg, nullptr, 1.0);
  CHECK(std::abs(final_value(r) - std::exp(-1.0)) <= 10.0 * cfg.rel_tol);
  CHECK(r.trajectory.back().t_end() == 1.0);
}

TEST_CASE("global error shrinks at fourth-order rate") {
  // Fixed-size steps isolate the method order from the step controller.
  OdeProblem p = scalar([](double, double y) { return -y; }, 1.0);
  auto err = [&](int steps) {
    IntegratorConfig cfg;
    cfg.rel_tol = 1.0;
    cfg.abs_tol = 1.0;
    cfg.max_step = 1.0;
    DormandPrince45 st(p, cfg);
    Vector y{1.0};
    const double h = 1.0 / steps;
    for (int k = 0; k < steps; ++k) y = st.step(k * h, y, h).y_next;
    return std::abs(y[0] - std::exp(-1.0));
  };
  for (int steps : {4, 8, 16}) CHECK(err(steps) / err(2 * steps) >= 8.0);

  // Halving both tolerances of the adaptive integrator reduces the error too.
  auto adaptive_err = [&](double tol) {
    IntegratorConfig cfg;
    cfg.rel_tol = tol;
    cfg.abs_tol = tol;
    return std::abs(final_value(integrate_until_event(p, cfg, nullptr, 1.0)) - std::exp(-1.0));
  };
  CHECK(adaptive_err(1e-10) < adaptive_err(1e-6));
}

TEST_CASE("linear crossing is located to event_tol") {
  IntegratorConfig cfg;
  GuardFn g = [](double, std::span<const double> y) { return y[0] - 1.0; };
  const auto r = integrate_until_event(scalar([](double, double) { return 1.0; }, 0.0), cfg, g, 5.0);
  REQUIRE(r.event());
  const auto& ev = std::get<EventAt>(r.outcome);
  CHECK_THAT(ev.t, WithinAbs(1.0, cfg.event_tol));
  CHECK(ev.t >= 1.0 - 1e-15);
  CHECK(r.trajectory.back().t_end() == ev.t);
}

TEST_CASE("guard never crossed reaches t_max") {
  GuardFn g = [](double, std::span<const double> y) { return y[0] - 2.0; };
  const auto r = integrate_until_event(scalar([](double, double y) { return -y; }, 1.0), {}, g, 3.0);
  CHECK_FALSE(r.event());
  CHECK_THAT(final_value(r), WithinAbs(std::exp(-3.0), 1e-9));
}

TEST_CASE("non-negative guard at start needs the flag") {
  GuardFn g = [](double, std::span<const double> y) { return y[0]; };
  auto p = scalar([](double, double) { return 1.0; }, 0.0);
  CHECK_THROWS_AS(integrate_until_event(p, {}, g, 1.0), PreconditionError);
  IntegrateOptions o;
  o.allow_nonnegative_start = true;
  CHECK_NOTHROW(integrate_until_event(p, {}, g, 1.0, o));
}

TEST_CASE("event time agrees with brute-force fixed-step integration") {
  // y' = cos(t) y, y(0) = 1 => y = exp(sin t); guard y = 2 crosses once before pi/2.
  auto p = scalar([](double t, double y) { return std::cos(t) * y; }, 1.0);
  GuardFn g = [](double, std::span<const double> y) { return y[0] - 2.0; };
  IntegratorConfig cfg;
  const auto r = integrate_until_event(p, cfg, g, 1.5);
  REQUIRE(r.event());
  const double t_star = std::get<EventAt>(r.outcome).t;

  // Classical RK4 at a step 1/100 of the typical accepted step, then linear interpolation.
  const double h = 1e-4;
  double t = 0.0, y = 1.0;
  auto f = [](double tt, double yy) { return std::cos(tt) * yy; };
  double t_cross = -1.0;
  while (t < 1.5) {
    const double k1 = f(t, y), k2 = f(t + h / 2, y + h / 2 * k1), k3 = f(t + h / 2, y + h / 2 * k2),
                 k4 = f(t + h, y + h * k3);
    const double yn = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (y < 2.0 && yn >= 2.0) {
      t_cross = t + h * (2.0 - y) / (yn - y);
      break;
    }
    y = yn;
    t += h;
  }
  REQUIRE(t_cross > 0.0);
  CHECK(std::abs(t_star - t_cross) <= cfg.event_tol + 1e-8);
  CHECK_THAT(t_star, WithinAbs(std::asin(std::log(2.0)), 1e-8));
}

TEST_CASE("first of several crossings inside one step is returned") {
  // Guard sin(20 t) > 0.5 first holds shortly after t = pi/120.
  IntegratorConfig cfg;
  cfg.max_step = 0.5;
  GuardFn g = [](double t, std::span<const double>) { return std::sin(20.0 * t) - 0.5; };
  const auto r = integrate_until_event(scalar([](double, double) { return 0.0; }, 0.0), cfg, g, 2.0);
  REQUIRE(r.event());
  CHECK_THAT(std::get<EventAt>(r.outcome).t, WithinAbs(M_PI / 120.0, 1e-8));
}

TEST_CASE("dense output matches step endpoints") {
  OdeProblem p{2,
               [](double, std::span<const double> y, std::span<double> dy) {
                 dy[0] = y[1];
                 dy[1] = -y[0];
               },
               0.0,
               {1.0, 0.0}};
  const auto r = integrate_until_event(p, {}, nullptr, 6.0);
  REQUIRE(r.trajectory.size() > 2);
  for (std::size_t k = 0; k + 1 < r.trajectory.size(); ++k) {
    const auto& a = r.trajectory[k];
    const auto& b = r.trajectory[k + 1];
    CHECK(a.t_end() == b.t_start());
    const Vector ya = a.evaluate(a.t_end());
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::abs(ya[i] - a.y_end()[i]) <= 1e-12);
      CHECK(std::abs(a.evaluate(a.t_start())[i] - a.y_start()[i]) <= 1e-12);
      CHECK(a.y_end()[i] == b.y_start()[i]);
    }
    const double tm = 0.5 * (a.t_start() + a.t_end());
    CHECK(std::abs(a.evaluate(tm)[0] - std::cos(tm)) <= 1e-8);
  }
}

TEST_CASE("integrator config validation") {
  IntegratorConfig c;
  c.rel_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = {};
  c.event_tol = 1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("step size underflow is reported") {
  // y' = y^2 from y = 1 blows up at t = 1.
  auto p = scalar([](double, double y) { return y * y; }, 1.0);
  CHECK_THROWS_AS(integrate_until_event(p, {}, nullptr, 2.0), IntegrationError);
}
