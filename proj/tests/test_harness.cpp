#include <catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "etac/harness/compare.hpp"
#include "etac/harness/config.hpp"
#include "etac/harness/emit.hpp"
#include "etac/harness/presets.hpp"
#include "etac/harness/runner.hpp"

using namespace etac;
using namespace etac::harness;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const ScenarioConfig c = parse_config(
      "# robustness plant\n"
      "system = disturbed_s6\n"
      "t_end = 2   # short\n"
      "x0 = 0.5, -0.5\n"
      "A1 = 2\n");
  CHECK(c.system == "disturbed_s6");
  CHECK(c.t_end == 2.0);
  CHECK(c.x0 == Vector{0.5, -0.5});
  CHECK(c.A1 == 2.0);
  CHECK(c.theta_true == Vector{1.0});
  CHECK(c.T == 3.0);
  CHECK(c.N_tilde == 7);
}

TEST_CASE("config errors carry line numbers and field names") {
  CHECK(error_line("system = planar_s5\nt_end = 1\nbogus = 3\n") == 3);
  CHECK(error_line("system = planar_s5\njust text\n") == 2);
  CHECK(error_line("system = planar_s5\nt_end = 1\nt_end = 2\n") == 3);
  CHECK(error_line("system = planar_s5\nt_end = abc\n") == 2);
  CHECK(error_text("system = planar_s5\n").find("t_end") != std::string::npos);
  CHECK(error_text("system = planar_s5\nt_end = -1\n").find("t_end") != std::string::npos);
  CHECK(error_text("system = planar_s5\nt_end = 1\nN_tilde = 0\n").find("N_tilde") != std::string::npos);
  CHECK(error_text("system = planar_s5\nt_end = 1\nx0 = 1\n").find("x0") != std::string::npos);
  CHECK(error_text("system = nothing\nt_end = 1\n").find("system") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), IoError);
}

TEST_CASE("config text round-trips") {
  for (const auto& p : preset_table()) {
    const ScenarioConfig c = *preset(p.name);
    CHECK(parse_config(to_config_text(c)) == c);
  }
}

TEST_CASE("presets cover every figure") {
  std::set<std::string> names;
  for (const auto& p : preset_table()) names.insert(p.name);
  for (int k = 1; k <= 20; ++k) CHECK(names.contains("fig" + std::to_string(k)));
  CHECK_FALSE(preset("fig21").has_value());

  const ScenarioConfig f4 = *preset("fig4");
  CHECK(f4.comparator == SchemeKind::EventTriggered);
  CHECK(f4.identifier == IdentifierKind::AuxScalar);
  CHECK(f4.A1 == 0.0);
  CHECK(f4.A2 == 0.0);
  CHECK(f4.theta_hat0 == Vector{-4.0});
  CHECK(f4.eps == 1e-6);
  const ScenarioConfig f10 = *preset("fig10");
  CHECK(f10.A1 == 2.0);
  CHECK(f10.A2 == 0.0);
  CHECK(preset("fig5")->A1 == f4.A1);
  CHECK(preset("fig15")->comparator == SchemeKind::ExtendedMatching);
  CHECK(preset("fig14")->comparator == SchemeKind::Nominal);
}

TEST_CASE("sample grid") {
  const auto ts = sample_times(20.0);
  CHECK(ts.front() == 0.0);
  CHECK(ts[100] == Catch::Approx(0.1).margin(1e-15));
  CHECK(ts[101] == Catch::Approx(0.11).margin(1e-15));
  CHECK(ts.back() == 20.0);
  CHECK(ts.size() == 101 + 1990);
  for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] > ts[i - 1]);
  const auto short_grid = sample_times(0.0505);
  CHECK(short_grid.back() == 0.0505);
}

TEST_CASE("nominal run has no events and decays") {
  const RunResult r = run_scenario(*preset("fig1"));
  CHECK(r.summary.event_count == 0);
  CHECK(r.events.empty());
  CHECK(r.rows.back().t == 20.0);
  CHECK(norm(r.rows.back().x) < 1e-6);
}

TEST_CASE("equilibrium run emits only dwell events") {
  ScenarioConfig c = *preset("fig4");
  c.x0 = {0.0, 0.0};
  c.eps = 0.0;
  c.t_end = 10.0;
  const RunResult r = run_scenario(c);
  REQUIRE(r.events.size() == 3);
  for (const auto& e : r.events) CHECK(e.cause == "DwellCapT");
  CHECK_FALSE(r.summary.convergence_time.has_value());
  CHECK_FALSE(summary_json(r.summary).contains("convergence_time"));
}

TEST_CASE("emission is deterministic and well formed") {
  ScenarioConfig c = *preset("fig4");
  c.t_end = 1.0;
  const RunResult a = run_scenario(c), b = run_scenario(c);
  const std::string ca = trajectory_csv(a);
  CHECK(ca == trajectory_csv(b));
  CHECK(events_csv(a) == events_csv(b));
  CHECK(ca.rfind("t,x1,x2,u1,th1,V\n", 0) == 0);
  CHECK(ca.back() == '\n');

  const auto dir = std::filesystem::temp_directory_path() / "etac_harness_test";
  std::filesystem::remove_all(dir);
  emit(a, dir);
  for (const char* f : {"trajectory.csv", "events.csv", "summary.json", "config.txt"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(load_config((dir / "config.txt").string()) == c);
  const SampledTrajectory s = load_run_dir(dir);
  CHECK(s.t.size() == a.rows.size());
  CHECK(s.x.back() == a.rows.back().x);
  CHECK(s.theta_true == Vector{1.0});

  const std::string ev = read_text(dir / "events.csv");
  const auto first_row = ev.substr(ev.find('\n') + 1);
  CHECK(first_row.rfind("1,", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("compare") {
  ScenarioConfig c = *preset("fig4");
  c.t_end = 2.0;
  const RunResult r = run_scenario(c);
  SECTION("identical runs") {
    const auto rep = compare(sampled(r), sampled(r));
    CHECK(rep.max_dx == 0.0);
    CHECK(rep.warnings.empty());
    for (const auto& row : rep.rows) CHECK(row.theta_err_a == row.theta_err_b);
  }
  SECTION("mismatched grids are resampled") {
    SampledTrajectory coarse = sampled(r);
    SampledTrajectory thin;
    thin.theta_true = coarse.theta_true;
    for (std::size_t i = 0; i < coarse.t.size(); i += 2) {
      thin.t.push_back(coarse.t[i]);
      thin.x.push_back(coarse.x[i]);
      thin.theta.push_back(coarse.theta[i]);
    }
    const auto rep = compare(coarse, thin);
    CHECK(rep.warnings.size() == 1);
    CHECK(rep.rows.size() == thin.t.size());
    CHECK(rep.max_dx == 0.0);
  }
}

TEST_CASE("simulation errors carry scenario context") {
  ScenarioConfig c = *preset("planar");
  c.name = "blowup";
  c.x0 = {50.0, 50.0};
  c.integrator.max_step = 1e-3;
  c.integrator.event_tol = 1e-9;
  c.t_end = 1.0;
  try {
    run_scenario(c);
    SUCCEED("large initial state was integrated");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("blowup") != std::string::npos);
  }
}
