#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "etac/errors.hpp"
#include "etac/harness/config.hpp"
#include "etac/harness/runner.hpp"

namespace etac::harness {

inline std::string trajectory_header(std::size_t n, std::size_t m, std::size_t l) {
  std::string h = "t";
  for (std::size_t i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  for (std::size_t i = 1; i <= m; ++i) h += ",u" + std::to_string(i);
  for (std::size_t i = 1; i <= l; ++i) h += ",th" + std::to_string(i);
  return h + ",V";
}

inline std::string trajectory_csv(const RunResult& r) {
  using detail::fmt;
  std::string out = trajectory_header(r.run.n, r.run.m, r.run.l) + "\n";
  for (const TrajectoryRow& row : r.rows) {
    out += fmt(row.t);
    for (double v : row.x) out += "," + fmt(v);
    for (double v : row.u) out += "," + fmt(v);
    for (double v : row.theta) out += "," + fmt(v);
    out += "," + fmt(row.V) + "\n";
  }
  return out;
}

inline std::string events_csv(const RunResult& r) {
  using detail::fmt;
  const std::size_t l = r.run.l;
  std::string out = "i,tau,cause";
  for (std::size_t j = 1; j <= l; ++j) out += ",th_before" + std::to_string(j);
  for (std::size_t j = 1; j <= l; ++j) out += ",th_after" + std::to_string(j);
  out += ",rank,residual,skipped,mu\n";
  for (const EventRow& e : r.events) {
    out += std::to_string(e.index) + "," + fmt(e.tau) + "," + e.cause;
    for (double v : e.theta_before) out += "," + fmt(v);
    for (double v : e.theta_after) out += "," + fmt(v);
    out += "," + std::to_string(e.rank) + "," + fmt(e.residual) + "," + (e.skipped ? "1" : "0") + "," + fmt(e.mu) +
           "\n";
  }
  return out;
}

inline nlohmann::json summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["system"] = s.system;
  j["scheme"] = s.scheme;
  j["theta_true"] = s.theta_true;
  j["final_theta_hat"] = s.final_theta_hat;
  if (s.first_event_time) j["first_event_time"] = *s.first_event_time;
  if (s.first_guard_time) j["first_guard_time"] = *s.first_guard_time;
  j["event_count"] = s.event_count;
  j["guard_events"] = s.guard_events;
  if (s.convergence_time) j["convergence_time"] = *s.convergence_time;
  j["sup_norm_x"] = s.sup_norm_x;
  j["final_norm_x"] = s.final_norm_x;
  j["rank_deficient_updates"] = s.rank_deficient_updates;
  j["skipped_updates"] = s.skipped_updates;
  j["max_gram_inconsistency"] = s.max_gram_inconsistency;
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write '" + p.string() + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + p.string() + "'");
}

/// Writes trajectory.csv, events.csv, summary.json and config.txt into out_dir.
inline void emit(const RunResult& r, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  write_text(out_dir / "trajectory.csv", trajectory_csv(r));
  write_text(out_dir / "events.csv", events_csv(r));
  write_text(out_dir / "summary.json", summary_json(r.summary).dump(2) + "\n");
  write_text(out_dir / "config.txt", to_config_text(r.config));
}

// ---- read-back -------------------------------------------------------------------

struct SampledTrajectory {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> theta;
  Vector theta_true;
  std::optional<double> convergence_time;
};

inline SampledTrajectory read_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("trajectory.csv: empty");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  std::vector<std::size_t> xi, thi;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].rfind("x", 0) == 0) xi.push_back(i);
    if (cols[i].rfind("th", 0) == 0) thi.push_back(i);
  }
  SampledTrajectory s;
  int ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) v.push_back(detail::parse_real(c, "trajectory.csv", ln));
    if (v.size() != cols.size()) throw IoError("trajectory.csv: wrong column count on line " + std::to_string(ln));
    s.t.push_back(v[0]);
    Vector x, th;
    for (auto i : xi) x.push_back(v[i]);
    for (auto i : thi) th.push_back(v[i]);
    s.x.push_back(std::move(x));
    s.theta.push_back(std::move(th));
  }
  return s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Loads trajectory.csv and summary.json from an emitted run directory.
inline SampledTrajectory load_run_dir(const std::filesystem::path& dir) {
  SampledTrajectory s = read_trajectory_csv(read_text(dir / "trajectory.csv"));
  try {
    const auto j = nlohmann::json::parse(read_text(dir / "summary.json"));
    s.theta_true = j.at("theta_true").get<Vector>();
    if (j.contains("convergence_time")) s.convergence_time = j["convergence_time"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("summary.json in '" + dir.string() + "': " + e.what());
  }
  return s;
}

inline SampledTrajectory sampled(const RunResult& r) {
  SampledTrajectory s;
  for (const auto& row : r.rows) {
    s.t.push_back(row.t);
    s.x.push_back(row.x);
    s.theta.push_back(row.theta);
  }
  s.theta_true = r.config.theta_true;
  s.convergence_time = r.summary.convergence_time;
  return s;
}

}  // namespace etac::harness
