// epr-alloc: eigenvector allocation, maximum-likelihood fusion, and
// Monte-Carlo verification of one-shot collaborative estimation plans.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>
#include <thread>

#include "epr/config.hpp"
#include "epr/report.hpp"
#include "epr/verify.hpp"
#include "epr/version.hpp"

namespace {

enum class LogLevel : int { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel g_log_level = LogLevel::warn;

void init_log_level() {
  const char* env = std::getenv("EPR_ALLOC_LOG");
  if (env == nullptr) return;
  const std::string value(env);
  if (value == "error") g_log_level = LogLevel::error;
  else if (value == "warn") g_log_level = LogLevel::warn;
  else if (value == "info") g_log_level = LogLevel::info;
  else if (value == "debug") g_log_level = LogLevel::debug;
  else std::cerr << "[epr-alloc] warn: ignoring unknown EPR_ALLOC_LOG value '" << value
                 << "'\n";
}

void log(LogLevel level, const std::string& message) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (static_cast<int>(level) <= static_cast<int>(g_log_level))
    std::cerr << "[epr-alloc] " << names[static_cast<int>(level)] << ": " << message
              << "\n";
}

std::string sidecar_csv_path(const std::string& out_path) {
  const std::string suffix = ".json";
  if (out_path.size() > suffix.size() &&
      out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return out_path.substr(0, out_path.size() - suffix.size()) + ".trials.csv";
  return out_path + ".trials.csv";
}

void emit_report(const epr::Json& report, const std::string& out_path) {
  const std::string text = epr::report_text(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    epr::write_text_file(out_path, text);
    log(LogLevel::info, "report written to " + out_path);
  }
}

int cmd_allocate(const std::string& config_path, const std::string& out_path) {
  const auto start = std::chrono::steady_clock::now();
  const epr::ParsedConfig parsed = epr::load_config(config_path);
  log(LogLevel::info, "config " + parsed.config_hash + " loaded from " + config_path);
  const epr::ExperimentSession session(parsed.experiment);
  log(LogLevel::info,
      "plan objective " + std::to_string(session.plan().objective) + ", predicted EPR " +
          std::to_string(session.predicted_epr()));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_report(epr::allocate_report(parsed, session, wall), out_path);
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const epr::ConfigOverrides& overrides, int threads) {
  const epr::ParsedConfig parsed = epr::load_config(config_path, overrides);
  log(LogLevel::info, "config " + parsed.config_hash + " loaded from " + config_path);
  const epr::ExperimentSession session(parsed.experiment);
  const epr::SimulationReport sim = epr::run_experiment(parsed.experiment, threads);
  log(LogLevel::info, "simulated " + std::to_string(sim.trials) + " trials, " +
                          std::to_string(sim.excluded) + " excluded");

  std::string csv_path;
  if (!out_path.empty()) {
    csv_path = sidecar_csv_path(out_path);
    epr::write_text_file(csv_path, epr::trials_csv(sim.records));
    log(LogLevel::info, "per-trial data written to " + csv_path);
  }
  emit_report(epr::simulate_report(parsed, session, sim, csv_path), out_path);

  if (epr::exceeds_exclusion_budget(sim.excluded, sim.trials)) {
    log(LogLevel::error, "flagged-trial budget exceeded: " + std::to_string(sim.excluded) +
                             " of " + std::to_string(sim.trials) + " trials excluded");
    return 4;
  }
  return 0;
}

int cmd_verify(const epr::VerifyOptions& options) {
  const auto results = epr::run_verification(options);
  bool all_passed = true;
  std::size_t width = 0;
  for (const auto& result : results) width = std::max(width, result.name.size());
  for (const auto& result : results) {
    all_passed = all_passed && result.passed;
    std::cout << (result.passed ? "PASS  " : "FAIL  ") << std::left
              << std::setw(static_cast<int>(width + 2)) << result.name << result.detail
              << "\n";
  }
  if (!all_passed) {
    for (const auto& result : results)
      if (!result.passed) log(LogLevel::error, "check failed: " + result.name);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log_level();

  CLI::App app{"eigenvector allocation and fusion for collaborative estimation"};
  app.set_version_flag("--version", std::string(epr::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::int64_t trials_override = 0;
  std::uint64_t seed_override = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  CLI::App* alloc = app.add_subcommand("allocate", "compute the optimal statistic plan");
  alloc->add_option("--config", config_path, "config file (JSON)")->required();
  alloc->add_option("--out", out_path, "report path (default: standard output)");

  CLI::App* simulate = app.add_subcommand("simulate", "run the Monte-Carlo experiment");
  simulate->add_option("--config", config_path, "config file (JSON)")->required();
  simulate->add_option("--out", out_path, "report path (default: standard output)");
  auto* trials_opt =
      simulate->add_option("--trials", trials_override, "override the trial count");
  auto* seed_opt = simulate->add_option("--seed", seed_override, "override the seed");
  simulate->add_option("--threads", threads, "worker threads (never affects results)");

  epr::VerifyOptions verify_options;
  CLI::App* verify = app.add_subcommand("verify", "run the self-check suite");
  verify->add_option("--max-k", verify_options.max_k, "largest helper count")
      ->check(CLI::Range(1, 12));
  verify->add_option("--max-m", verify_options.max_m, "largest statistic dimension")
      ->check(CLI::Range(1, 8));
  verify->add_option("--max-alphabet", verify_options.max_alphabet, "largest alphabet")
      ->check(CLI::Range(2, 16));
  verify->add_option("--instances", verify_options.instances, "random instances per check")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "[epr-alloc] error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (alloc->parsed()) return cmd_allocate(config_path, out_path);
    if (simulate->parsed()) {
      epr::ConfigOverrides overrides;
      if (trials_opt->count() > 0) overrides.trials = trials_override;
      if (seed_opt->count() > 0) overrides.seed = seed_override;
      return cmd_simulate(config_path, out_path, overrides, threads);
    }
    if (const char* inject = std::getenv("EPR_ALLOC_VERIFY_INJECT"))
      verify_options.inject = inject;  // test-harness hook
    return cmd_verify(verify_options);
  } catch (const epr::ConfigError& e) {
    log(LogLevel::error, e.what());
    return 2;
  } catch (const epr::InfeasibleError& e) {
    log(LogLevel::error, std::string("infeasible instance: ") + e.what());
    return 3;
  } catch (const epr::NumericError& e) {
    log(LogLevel::error, std::string("numerical failure: ") + e.what());
    return 3;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return 2;
  }
}
