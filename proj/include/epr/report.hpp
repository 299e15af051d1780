#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "epr/config.hpp"

namespace epr {

namespace detail {

inline Json vector_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Json matrix_columns_json(const Matrix& m) {
  Json cols = Json::array();
  for (int c = 0; c < m.cols(); ++c) cols.push_back(vector_json(m.col(c)));
  return cols;
}

inline Json one_based_sets_json(const std::vector<std::vector<int>>& sets) {
  Json out = Json::array();
  for (const auto& set : sets) {
    std::vector<int> one_based;
    one_based.reserve(set.size());
    for (int j : set) one_based.push_back(j + 1);
    out.push_back(one_based);
  }
  return out;
}

inline Json tool_json() {
  Json tool;
  tool["name"] = kToolName;
  tool["version"] = kToolVersion;
  return tool;
}

inline Json plan_json(const AllocationPlan& plan) {
  Json out;
  out["helper_sets"] = one_based_sets_json(plan.sets);
  out["objective"] = plan.objective;
  out["epr"] = plan.epr;
  return out;
}

}  // namespace detail

// Report for the allocate workflow: spectrum, chosen plan, the statistic
// matrices helpers would apply, and the closed-form predictions.
inline Json allocate_report(const ParsedConfig& parsed, const ExperimentSession& session,
                            double wall_time_seconds) {
  Json report;
  report["schema_version"] = kReportSchemaVersion;
  report["mode"] = "allocate";
  report["tool"] = detail::tool_json();
  report["config_hash"] = parsed.config_hash;
  report["effective_config"] = parsed.effective;

  const Eigensystem& eigs = session.eigensystem_of_h();
  report["eigensystem"]["lambdas"] = detail::vector_json(eigs.lambdas);
  report["eigensystem"]["vectors"] = detail::matrix_columns_json(eigs.vectors);

  report["plan"] = detail::plan_json(session.plan());
  Json matrices = Json::array();
  for (const auto& f : session.matrices()) {
    Json entry;
    entry["helper"] = f.helper_id + 1;
    entry["columns"] = detail::matrix_columns_json(f.columns);
    matrices.push_back(entry);
  }
  report["statistic_matrices"] = matrices;

  report["predicted_epr"] = session.predicted_epr();
  report["baseline_epr"] = session.baseline_epr();
  report["wall_time_seconds"] = wall_time_seconds;
  return report;
}

// Report for the simulate workflow: plan echo, spectrum summary, predictions
// and the empirical aggregate, plus the per-trial CSV sidecar path.
inline Json simulate_report(const ParsedConfig& parsed, const ExperimentSession& session,
                            const SimulationReport& sim, const std::string& csv_path) {
  Json report;
  report["schema_version"] = kReportSchemaVersion;
  report["mode"] = "simulate";
  report["tool"] = detail::tool_json();
  report["config_hash"] = parsed.config_hash;
  report["effective_config"] = parsed.effective;

  report["eigenvalues"] = detail::vector_json(session.eigensystem_of_h().lambdas);
  report["plan"] = detail::plan_json(sim.plan);
  report["predicted_epr"] = sim.predicted_epr;
  report["baseline_epr"] = sim.baseline_epr;
  report["empirical"]["epr_mean"] = sim.empirical_mean;
  report["empirical"]["epr_stderr"] = sim.empirical_stderr;
  report["empirical"]["trials"] = sim.trials;
  report["empirical"]["excluded"] = sim.excluded;
  if (csv_path.empty()) {
    report["per_trial_csv"] = nullptr;
  } else {
    report["per_trial_csv"] = csv_path;
  }
  report["wall_time_seconds"] = sim.wall_time_seconds;
  return report;
}

inline constexpr const char* kTrialsCsvHeader = "trial-id,excess-risk,phi-dist,mass-defect";

// Fixed-header CSV, one row per trial, full double precision. Failed trials
// appear with excess-risk "nan" so row count always equals the trial count.
inline std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::string out(kTrialsCsvHeader);
  out.push_back('\n');
  char buf[128];
  for (const auto& rec : records) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(rec.trial_id), rec.excess_risk, rec.phi_dist,
                  rec.mass_defect);
    out += buf;
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
  if (!out) throw ConfigError("cannot write output file: " + path);
}

inline std::string report_text(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace epr
