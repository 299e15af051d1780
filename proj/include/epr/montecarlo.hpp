#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "epr/fusion.hpp"
#include "epr/random.hpp"

namespace epr {

enum class PlanSource { algorithm, brute_force, explicit_plan, baseline };
enum class ThetaMethod { perturbation, erm_resolve };

inline const char* to_string(PlanSource s) {
  switch (s) {
    case PlanSource::algorithm: return "algorithm";
    case PlanSource::brute_force: return "brute-force";
    case PlanSource::explicit_plan: return "explicit";
    default: return "baseline";
  }
}

inline const char* to_string(ThetaMethod m) {
  return m == ThetaMethod::perturbation ? "perturbation" : "erm-resolve";
}

// Everything a simulation needs. config_hash is provenance filled in by the
// config layer (empty for ad-hoc in-process configs).
struct ExperimentConfig {
  LossModel model;
  Distribution p;
  NodeProfile profile;
  PlanSource plan_source = PlanSource::algorithm;
  std::vector<std::vector<int>> explicit_sets{};  // used when plan_source == explicit_plan
  std::int64_t trials = 1;
  ThetaMethod theta_method = ThetaMethod::erm_resolve;
  RandomSeed seed;
  bool as_printed_estimator = false;
  double solver_tol = kDefaultSolverTol;
  int solver_max_iters = kDefaultSolverMaxIters;
  double pinv_tol = kDefaultPinvTol;
  std::string config_hash{};
};

struct TrialRecord {
  std::int64_t trial_id = 0;
  double excess_risk = 0.0;  // NaN when the trial failed
  double phi_dist = 0.0;     // ||phi_tilde - phi_star||^2
  double mass_defect = 0.0;
  bool failed = false;
};

struct SimulationReport {
  std::string config_hash{};
  double predicted_epr = 0.0;
  double baseline_epr = 0.0;
  double empirical_mean = 0.0;    // over non-failed trials, in trial order
  double empirical_stderr = 0.0;
  std::int64_t trials = 0;
  std::int64_t excluded = 0;
  AllocationPlan plan;
  std::vector<TrialRecord> records;
  double wall_time_seconds = 0.0;
};

// Stream addressing: trial t, node j (0 = target, helpers from 1) draws from
// stream t * kStreamStride + j. Keying streams by node rather than by plan
// gives common random numbers across plans sharing a seed.
inline constexpr std::uint64_t kStreamStride = 1024;

// Precomputed per-experiment state: theta*, curvature matrix, eigensystem,
// resolved plan, statistic matrices, and the closed-form predictions.
class ExperimentSession {
 public:
  explicit ExperimentSession(ExperimentConfig config)
      : config_(std::move(config)), phi_star_(reference_info_vector(config_.p)) {
    config_.profile.validate();
    if (config_.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (config_.profile.k() + 1 >= static_cast<int>(kStreamStride))
      throw std::invalid_argument("too many helpers for the stream layout");

    opt_ = optimal_parameter(config_.model, config_.p, config_.solver_tol,
                             config_.solver_max_iters);
    h_ = epr_norm_matrix(config_.model, config_.p, opt_, config_.pinv_tol);
    eigs_ = eigensystem(h_);

    switch (config_.plan_source) {
      case PlanSource::algorithm:
        plan_ = allocate(eigs_, config_.profile);
        break;
      case PlanSource::brute_force:
        plan_ = brute_force_allocate(eigs_, config_.profile);
        break;
      case PlanSource::explicit_plan:
        plan_.sets = config_.explicit_sets;
        plan_.objective = plan_objective(eigs_.lambdas, config_.profile, plan_.sets);
        plan_.epr = 0.5 * plan_.objective;
        validate_explicit_sets();
        break;
      case PlanSource::baseline: {
        plan_.sets.clear();
        double obj = 0.0;
        for (int j = 0; j < eigs_.lambdas.size(); ++j)
          obj += eigs_.lambdas[j] / static_cast<double>(config_.profile.n0);
        plan_.objective = obj;
        plan_.epr = 0.5 * plan_.objective;
        break;
      }
    }
    if (!plan_.sets.empty()) matrices_ = plan_matrices(eigs_, plan_);

    baseline_mse_ = h_.h.trace() / static_cast<double>(config_.profile.n0);
    predicted_mse_ = plan_.sets.empty()
                         ? baseline_mse_
                         : predicted_mse(h_, matrices_, config_.profile);
    if (config_.theta_method == ThetaMethod::perturbation)
      perturbation_map_ = perturbation_map(config_.model, config_.p, opt_, config_.pinv_tol);
  }

  const ExperimentConfig& config() const { return config_; }
  const OptimalParameter& optimum() const { return opt_; }
  const EprNormMatrix& norm_matrix() const { return h_; }
  const Eigensystem& eigensystem_of_h() const { return eigs_; }
  const AllocationPlan& plan() const { return plan_; }
  const std::vector<StatisticMatrix>& matrices() const { return matrices_; }
  double predicted_epr() const { return 0.5 * predicted_mse_; }
  double baseline_epr() const { return 0.5 * baseline_mse_; }

  // One end-to-end trial: sample every node, project, fuse, reconstruct,
  // refit, and score. Deterministic in (config seed, trial_id).
  TrialRecord run_trial(std::int64_t trial_id) const {
    TrialRecord rec;
    rec.trial_id = trial_id;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    try {
      const RandomSeed base = config_.seed;
      const std::uint64_t stream0 =
          base.stream + static_cast<std::uint64_t>(trial_id) * kStreamStride;

      const Distribution q0 =
          sample_empirical(config_.p, config_.profile.n0, {base.seed, stream0});
      const InfoVector phi_hat0 = info_vector(config_.p, q0);

      std::vector<TransmittedStatistic> stats;
      stats.reserve(matrices_.size());
      for (const auto& f : matrices_) {
        const std::uint64_t stream_i = stream0 + 1 + static_cast<std::uint64_t>(f.helper_id);
        const std::int64_t n_i = config_.profile.helpers[f.helper_id];
        const Distribution q_i = sample_empirical(config_.p, n_i, {base.seed, stream_i});
        stats.push_back(transmit(f, info_vector(config_.p, q_i), n_i));
      }

      const FusedEstimate fused = ml_fuse(phi_hat0, config_.profile.n0, stats, matrices_,
                                          config_.as_printed_estimator);
      rec.phi_dist = (fused.phi.coords - phi_star_.coords).squaredNorm();

      const Reconstruction recon = reconstruct_distribution(fused.phi, config_.p);
      rec.mass_defect = recon.mass_defect;

      Vector theta_hat;
      if (config_.theta_method == ThetaMethod::perturbation) {
        theta_hat =
            opt_.theta_star - perturbation_map_ * (fused.phi.coords - phi_star_.coords);
      } else {
        theta_hat = erm_solve(config_.model, recon.q, config_.solver_tol,
                              config_.solver_max_iters);
      }
      rec.excess_risk =
          population_risk(config_.model, config_.p, theta_hat) - opt_.risk_at_optimum;
    } catch (const NumericError&) {
      rec.failed = true;
      rec.excess_risk = nan;
    }
    return rec;
  }

 private:
  void validate_explicit_sets() const {
    if (static_cast<int>(plan_.sets.size()) != config_.profile.k())
      throw std::invalid_argument("explicit plan must assign a set to every helper");
    for (const auto& set : plan_.sets) {
      if (static_cast<int>(set.size()) != config_.profile.m)
        throw std::invalid_argument("explicit plan sets must have exactly m indices");
      for (std::size_t i = 1; i < set.size(); ++i)
        if (set[i] <= set[i - 1])
          throw std::invalid_argument("explicit plan sets must be strictly ascending");
    }
  }

  ExperimentConfig config_;
  OptimalParameter opt_;
  EprNormMatrix h_;
  Eigensystem eigs_;
  InfoVector phi_star_;
  AllocationPlan plan_;
  std::vector<StatisticMatrix> matrices_;
  Matrix perturbation_map_;
  double predicted_mse_ = 0.0;
  double baseline_mse_ = 0.0;
};

inline TrialRecord run_trial(const ExperimentConfig& config, std::int64_t trial_id) {
  return ExperimentSession(config).run_trial(trial_id);
}

// Exclusion budget for flagged (non-convergent) trials: more than this
// fraction invalidates the simulation.
inline constexpr double kExclusionBudget = 0.001;

inline bool exceeds_exclusion_budget(std::int64_t excluded, std::int64_t trials) {
  return static_cast<double>(excluded) > kExclusionBudget * static_cast<double>(trials);
}

// Runs all trials (optionally across threads; the thread count never
// affects the output) and aggregates them in trial order.
inline SimulationReport run_experiment(const ExperimentConfig& config, int threads = 1) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentSession session(config);

  const std::int64_t trials = config.trials;
  std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(trials)));
  if (workers == 1) {
    for (std::int64_t t = 0; t < trials; ++t) records[t] = session.run_trial(t);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (std::int64_t t = w; t < trials; t += workers)
          records[t] = session.run_trial(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  SimulationReport report;
  report.config_hash = config.config_hash;
  report.predicted_epr = session.predicted_epr();
  report.baseline_epr = session.baseline_epr();
  report.trials = trials;
  report.plan = session.plan();

  // Deterministic fold in trial order, independent of execution schedule.
  double sum = 0.0;
  std::int64_t kept = 0;
  for (const auto& rec : records) {
    if (rec.failed) {
      ++report.excluded;
    } else {
      sum += rec.excess_risk;
      ++kept;
    }
  }
  report.empirical_mean = kept > 0 ? sum / static_cast<double>(kept) : 0.0;
  double sq = 0.0;
  for (const auto& rec : records) {
    if (!rec.failed) {
      const double d = rec.excess_risk - report.empirical_mean;
      sq += d * d;
    }
  }
  report.empirical_stderr =
      kept > 1 ? std::sqrt(sq / static_cast<double>(kept - 1)) /
                     std::sqrt(static_cast<double>(kept))
               : 0.0;
  report.records = std::move(records);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// A labeled plan choice for side-by-side comparison.
struct PlanChoice {
  std::string label;
  PlanSource source = PlanSource::algorithm;
  std::vector<std::vector<int>> explicit_sets;
};

struct PlanComparison {
  std::string label;
  SimulationReport report;
};

// Runs the same experiment under each plan choice with common random
// numbers (identical seed and trial streams), returning reports ranked by
// empirical EPR, best first. Ties keep the input order.
inline std::vector<PlanComparison> compare_plans(const ExperimentConfig& config,
                                                 const std::vector<PlanChoice>& choices,
                                                 int threads = 1) {
  if (choices.size() < 2)
    throw std::invalid_argument("plan comparison needs at least two choices");
  std::vector<PlanComparison> out;
  out.reserve(choices.size());
  for (const auto& choice : choices) {
    ExperimentConfig variant = config;
    variant.plan_source = choice.source;
    variant.explicit_sets = choice.explicit_sets;
    out.push_back(PlanComparison{choice.label, run_experiment(variant, threads)});
  }
  std::stable_sort(out.begin(), out.end(), [](const PlanComparison& a, const PlanComparison& b) {
    return a.report.empirical_mean < b.report.empirical_mean;
  });
  return out;
}

}  // namespace epr
