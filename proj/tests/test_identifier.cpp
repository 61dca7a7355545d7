#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "etac/identifier.hpp"
#include "etac/systems.hpp"
#include "etac/trigger_controller.hpp"
#include "oracles.hpp"

using namespace etac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Snapshot snap(double t, Vector x, IdentifierState s) { return {t, std::move(x), std::move(s)}; }

ClosedLoopRun planar_run(std::uint64_t seed, double t_end, ClosedLoopSpec* out_spec = nullptr) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto e = systems::example_planar();
  ClosedLoopSpec spec;
  spec.plant = e.plant;
  spec.controller = e.controller;
  spec.trigger.T = 0.5;
  spec.trigger.a_fn = systems::quadratic_threshold(0.05);
  spec.window = {3, 0.5};
  spec.theta_true = {u(rng), u(rng)};
  spec.theta_hat0 = {u(rng), u(rng)};
  spec.x0 = {u(rng), u(rng)};
  spec.t_end = t_end;
  if (out_spec) *out_spec = spec;
  return run_closed_loop(spec);
}

}  // namespace

TEST_CASE("accumulator derivative examples") {
  const auto plant = systems::example_disturbed().plant;
  SECTION("robustness plant from zero state") {
    const auto d = accumulator_rhs(plant, {1.0, 1.0}, {0.0}, IdentifierState::zero(2, 1));
    CHECK(d.z == Vector{1.0, 0.0});
    CHECK(d.B(0, 0) == 1.0);
    CHECK(d.B(1, 0) == 0.0);
  }
  SECTION("zero innovation") {
    IdentifierState s = IdentifierState::zero(2, 1);
    s.z = {0.3, -0.2};
    s.B(0, 0) = 5.0;
    const auto d = accumulator_rhs(plant, {0.3, -0.2}, {0.0}, s);
    CHECK(d.w == Vector{0.0, 0.0});
    CHECK(d.phi == Vector{0.0});
  }
  SECTION("zero regressor") {
    IdentifierState s = IdentifierState::zero(2, 1);
    s.z = {1.0, 2.0};
    const auto d = accumulator_rhs(plant, {0.5, 0.5}, {0.0}, s);
    CHECK(d.phi == Vector{0.0});
    CHECK(norm(d.Q) == 0.0);
    CHECK(norm(d.R) == 0.0);
  }
  SECTION("packed layout round-trips") {
    IdentifierState s = IdentifierState::zero(2, 2);
    double v = 1.0;
    for (auto* vec : {&s.z, &s.w, &s.phi})
      for (double& x : *vec) x = v++;
    for (auto* m : {&s.B, &s.Q, &s.R})
      for (double& x : m->flat()) x = v++;
    Vector packed(IdentifierState::packed_size(2, 2));
    s.pack(packed);
    const auto back = IdentifierState::unpack(packed, 2, 2);
    CHECK(back.z == s.z);
    CHECK(back.R == s.R);
    CHECK(back.Q == s.Q);
  }
  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(accumulator_rhs(plant, {1.0}, {0.0}, IdentifierState::zero(2, 1)), DimensionError);
  }
}

TEST_CASE("mu_index examples") {
  const std::vector<double> t1{0.0, 3.0, 6.0, 9.0};
  const auto a = mu_index(t1, 2, {2, 3.0});
  CHECK(a.mu_time == 3.0);
  CHECK(a.event_index == 1);
  const std::vector<double> t2{0.0, 3.0};
  CHECK(mu_index(t2, 0, {7, 3.0}).mu_time == 0.0);
  const std::vector<double> t3{0.4, 0.9};
  CHECK(mu_index(t3, 0, {1, 1.0}).event_index == 0);
}

TEST_CASE("gram from snapshots with constant regressor") {
  // n = l = 1, g = 1, no drift and x = 0: B = t, Q = t^2/2, R = t^3/3.
  IdentifierState s = IdentifierState::zero(1, 1);
  const double t = 2.0;
  s.B(0, 0) = t;
  s.Q(0, 0) = t * t / 2.0;
  s.R(0, 0) = t * t * t / 3.0;
  const auto g = gram_from_snapshots(snap(t, {0.0}, s), snap(0.0, {0.0}, IdentifierState::zero(1, 1)));
  CHECK_THAT(g.G(0, 0), WithinAbs(4.0 / 3.0, 1e-14));
}

TEST_CASE("degenerate and misordered windows") {
  const auto z = IdentifierState::zero(2, 1);
  CHECK_THROWS_AS(gram_from_snapshots(snap(1.0, {0, 0}, z), snap(1.0, {0, 0}, z)), OrderingError);
  CHECK_THROWS_AS(gram_single_integral(snap(1.0, {0, 0}, z), snap(2.0, {0, 0}, z)), OrderingError);
  // Windows shrinking to zero width give a vanishing pair.
  const auto g = gram_from_snapshots(snap(1.0 + 1e-12, {0, 0}, z), snap(1.0, {0, 0}, z));
  CHECK(norm(g.G) == 0.0);
  CHECK(norm(g.Z) == 0.0);
}

TEST_CASE("single-integral pair from the origin reduces to the cumulative Gram") {
  ClosedLoopSpec spec;
  const ClosedLoopRun run = planar_run(1, 1.0, &spec);
  const auto& last = run.events.back();
  const auto g = gram_single_integral(last.snapshot, run.events.front().snapshot);
  CHECK(g.G == symmetrized(last.snapshot.state.R));
}

TEST_CASE("snapshot pair is half the literal double integral") {
  for (std::uint64_t seed : {2u, 3u}) {
    ClosedLoopSpec spec;
    const ClosedLoopRun run = planar_run(seed, 1.2, &spec);
    REQUIRE(run.events.size() >= 3);
    const auto& tau = run.events[2];
    const auto& mu = run.events[0];
    const auto ref = oracle::window_quadrature(run, spec.plant, spec.controller, mu.tau, tau.tau);
    const auto snap_pair = gram_from_snapshots(tau.snapshot, mu.snapshot).scaled(2.0);
    CHECK(norm(snap_pair.G - ref.G) <= 1e-8 * norm(ref.G));
    CHECK(norm(snap_pair.Z - ref.Z) <= 1e-8 * norm(ref.Z));

    const auto single = gram_single_integral(tau.snapshot, run.events[1].snapshot);
    const auto ref1 = oracle::window_quadrature(run, spec.plant, spec.controller, run.events[1].tau, tau.tau);
    // The expansion subtracts cumulative accumulators; roundoff scales with them.
    const double floor = 1e-12 * (1.0 + norm(tau.snapshot.state.R));
    CHECK(norm(single.G - ref1.G_single) <= 1e-8 * norm(ref1.G_single) + floor);
    CHECK(norm(single.Z - ref1.Z_single) <= 1e-8 * norm(ref1.Z_single) + floor);
  }
}

TEST_CASE("noise-free windows are consistent and PSD") {
  ClosedLoopSpec spec;
  const ClosedLoopRun run = planar_run(4, 3.0, &spec);
  for (std::size_t i = 1; i < run.events.size(); ++i) {
    const auto& g = run.events[i].snapshot_gram;
    CHECK(g.inconsistency(spec.theta_true) <= 1e-6 * (1.0 + norm(g.G) * norm(spec.theta_true)));
    CHECK(g.psd_within_roundoff());
    // h(v) - h(theta) = (v - theta)'G(v - theta) > 0 for full-rank G.
    if (sym_eig(g.G).eigenvalues.back() > 1e-9 * sym_eig(g.G).lambda_max()) {
      const Vector v = spec.theta_true + Vector{0.1, -0.2};
      const auto form = [&](const Vector& th) { return dot(th, g.G * th) - 2.0 * dot(g.Z, th); };
      CHECK(form(v) > form(spec.theta_true));
    }
  }
}

TEST_CASE("update_estimate policies") {
  SECTION("vanishing system keeps the estimate") {
    const auto r = update_estimate(Vector{0.7}, GramSystem{Matrix{{0.0}}, {0.0}}, MinNormPolicy{});
    CHECK(r.theta == Vector{0.7});
    CHECK(r.report.rank == 0);
  }
  SECTION("scalar quotient") {
    const auto r = update_estimate(Vector{-4.0}, GramSystem{Matrix{{2.5}}, {5.0}}, MinNormPolicy{});
    CHECK_THAT(r.theta[0], WithinRel(2.0, 1e-15));
  }
  SECTION("dead zone gate") {
    const DeadZonePolicy dz{kDefaultRankTol, 1e-6};
    const auto held = update_estimate(Vector{-4.0}, GramSystem{Matrix{{0.5e-6}}, {0.5e-6}}, dz);
    CHECK(held.report.skipped);
    CHECK(held.theta == Vector{-4.0});
    const auto moved = update_estimate(Vector{-4.0}, GramSystem{Matrix{{2e-6}}, {2e-6}}, dz);
    CHECK_FALSE(moved.report.skipped);
    CHECK_THAT(moved.theta[0], WithinRel(1.0, 1e-12));
  }
  SECTION("tikhonov") {
    const auto r = update_estimate(Vector{0.0}, GramSystem{Matrix{{1.0}}, {2.0}}, TikhonovPolicy{1.0});
    CHECK_THAT(r.theta[0], WithinAbs(1.0, 1e-15));
  }
  SECTION("common scale leaves the update unchanged") {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 20; ++k) {
      const Matrix g = oracle::random_psd(rng, 3, 1 + k % 3);
      const Vector z = g * oracle::random_vector(rng, 3);
      const GramSystem gs{g, z};
      const Vector prev = oracle::random_vector(rng, 3);
      const auto a = update_estimate(prev, gs, MinNormPolicy{});
      const auto b = update_estimate(prev, gs.scaled(2.0), MinNormPolicy{});
      CHECK(norm(a.theta - b.theta) <= 1e-10 * (1.0 + norm(a.theta)));
    }
  }
  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(update_estimate(Vector{1.0, 2.0}, GramSystem{Matrix{{1.0}}, {1.0}}, MinNormPolicy{}),
                    DimensionError);
  }
}
