// etac_cli: run scenarios, compare emitted runs, list presets, run the acceptance suite.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "acceptance/checks.hpp"
#include "etac/etac.hpp"

namespace fs = std::filesystem;
using namespace etac;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSimulation = 2, kAcceptance = 3 };

harness::ScenarioConfig resolve(const std::string& arg) {
  if (auto p = harness::preset(arg)) return *p;
  return harness::load_config(arg);
}

int cmd_run(const std::string& target, const std::string& out) {
  harness::ScenarioConfig cfg;
  try {
    cfg = resolve(target);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  try {
    const auto res = harness::run_scenario(cfg);
    const fs::path dir = out.empty() ? fs::path("out") / cfg.name : fs::path(out);
    harness::emit(res, dir);
    const auto& s = res.summary;
    std::printf("%s: %zu events (%zu guard), sup |x| = %.6g, final theta_hat = %s\n", cfg.name.c_str(),
                s.event_count, s.guard_events, s.sup_norm_x, harness::detail::fmt(s.final_theta_hat).c_str());
    if (s.convergence_time) std::printf("  estimate converged at t = %.6g\n", *s.convergence_time);
    std::printf("  wrote %s\n", dir.string().c_str());
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSimulation;
  }
  return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  try {
    const auto rep = harness::compare(harness::load_run_dir(a), harness::load_run_dir(b));
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    const fs::path dir = out.empty() ? fs::path("out") / "compare" : fs::path(out);
    fs::create_directories(dir);
    harness::write_text(dir / "comparison.csv", harness::comparison_csv(rep));
    harness::write_text(dir / "comparison.json", harness::comparison_json(rep).dump(2) + "\n");
    std::printf("max |x_a - x_b| = %.6g, after t = %.6g: %.6g\n", rep.max_dx, rep.from_time, rep.max_dx_after);
    std::printf("terminal max |x|: %.6g vs %.6g\n", rep.terminal_a.max_norm_x, rep.terminal_b.max_norm_x);
    std::printf("  wrote %s\n", dir.string().c_str());
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSimulation;
  }
  return kOk;
}

int cmd_list() {
  for (const auto& p : harness::preset_table()) std::printf("%-11s %-14s %s\n", p.name.c_str(), p.scenario.c_str(),
                                                            p.description.c_str());
  return kOk;
}

int cmd_selftest() {
  const int failures = acceptance::run_all(stdout);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-triggered adaptive control simulator"};
  app.require_subcommand(1);

  std::string target, run_out;
  auto* run = app.add_subcommand("run", "simulate a preset or config file");
  run->add_option("target", target, "preset name or config path")->required();
  run->add_option("--out", run_out, "output directory (default out/<name>)");

  std::string dir_a, dir_b, cmp_out;
  auto* cmp = app.add_subcommand("compare", "compare two emitted run directories");
  cmp->add_option("dirA", dir_a)->required();
  cmp->add_option("dirB", dir_b)->required();
  cmp->add_option("--out", cmp_out, "output directory (default out/compare)");

  auto* list = app.add_subcommand("list-presets", "list built-in presets");
  auto* self = app.add_subcommand("selftest", "run the acceptance checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*run) return cmd_run(target, run_out);
  if (*cmp) return cmd_compare(dir_a, dir_b, cmp_out);
  if (*list) return cmd_list();
  if (*self) return cmd_selftest();
  return kUsage;
}
