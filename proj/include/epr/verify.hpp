#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "epr/montecarlo.hpp"

namespace epr {

struct VerifyOptions {
  int max_k = 4;
  int max_m = 2;
  int max_alphabet = 8;
  int instances = 200;
  std::uint64_t seed = 0x5eedbead;
  std::string inject;  // test-harness hook: name of a check to sabotage
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace verify_detail {

inline std::int64_t rand_int(StreamRng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.next_u64() %
                                        static_cast<std::uint64_t>(hi - lo + 1));
}

// Descending non-negative eigenvalues; occasionally a zero tail to exercise
// degenerate directions.
inline Vector random_lambdas(StreamRng& rng, int dim) {
  Vector lam(dim);
  for (int j = 0; j < dim; ++j) lam[j] = rng.next_uniform();
  std::sort(lam.data(), lam.data() + dim, std::greater<double>());
  if (rng.next_uniform() < 0.25) {
    const int zeros = static_cast<int>(rand_int(rng, 1, dim - 1));
    for (int j = dim - zeros; j < dim; ++j) lam[j] = 0.0;
  }
  return lam;
}

inline NodeProfile random_profile(StreamRng& rng, int k, int m) {
  NodeProfile profile;
  profile.n0 = rand_int(rng, 1, 100);
  for (int i = 0; i < k; ++i) profile.helpers.push_back(rand_int(rng, 1, 100));
  profile.m = m;
  return profile;
}

// Strictly positive random distribution (floored away from the boundary so
// downstream pseudo-inverses stay well-conditioned).
inline Distribution random_positive_distribution(StreamRng& rng, const Alphabet& alphabet) {
  const int size = alphabet.size();
  Vector mass(size);
  for (int x = 0; x < size; ++x) mass[x] = -std::log(1.0 - rng.next_uniform());
  mass /= mass.sum();
  mass = 0.85 * mass + Vector::Constant(size, 0.15 / size);
  mass /= mass.sum();
  return Distribution(alphabet, mass);
}

// Order-insensitive sum: same multiset of terms -> identical double.
inline double canonical_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end(), std::greater<double>());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

// Bell numbers by the Bell-triangle recurrence (exact in 64 bits for the
// sizes accepted here).
inline std::vector<std::uint64_t> bell_numbers(int max_k) {
  std::vector<std::uint64_t> bell;
  std::vector<std::uint64_t> row{1};
  for (int k = 1; k <= max_k; ++k) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t entry : row) next.push_back(next.back() + entry);
    bell.push_back(row.back());
    row = std::move(next);
  }
  return bell;  // bell[k-1] = B_k = number of partitions of {1..k}
}

inline std::string pass_detail(const std::ostringstream& out) { return out.str(); }

}  // namespace verify_detail

// --- individual checks ------------------------------------------------------

// Partition enumeration counts match the Bell recurrence.
inline CheckResult check_bell_counts(int max_k) {
  const auto bell = verify_detail::bell_numbers(max_k);
  std::ostringstream detail;
  bool ok = true;
  for (int k = 1; k <= max_k; ++k) {
    std::uint64_t count = 0;
    for_each_partition(k, [&](const Partition&) { ++count; });
    if (k > 1) detail << ", ";
    detail << "B_" << k << "=" << count;
    if (count != bell[k - 1]) {
      detail << " (expected " << bell[k - 1] << ")";
      ok = false;
    }
  }
  return CheckResult{"bell-counts", ok, detail.str()};
}

// m-th partition counts match exhaustively derived values, and m=1 reduces
// to the ordinary enumeration element by element.
inline CheckResult check_m_partition_counts(int max_k, int max_m) {
  struct Expected {
    int k, m;
    std::size_t count;
  };
  // Frozen counts, derived by independent exhaustive construction.
  const std::vector<Expected> table = {
      {1, 2, 1}, {2, 2, 3}, {3, 2, 16}, {4, 2, 139}, {2, 3, 4}, {3, 3, 39}};
  std::ostringstream detail;
  bool ok = true;
  bool first = true;
  for (const auto& expected : table) {
    if (expected.k > max_k || expected.m > max_m) continue;
    const auto parts = enumerate_m_partitions(expected.k, expected.m);
    if (!first) detail << ", ";
    first = false;
    detail << "(k=" << expected.k << ",m=" << expected.m << ")=" << parts.size();
    if (parts.size() != expected.count) {
      detail << " (expected " << expected.count << ")";
      ok = false;
    }
  }
  for (int k = 1; k <= std::min(max_k, 6); ++k) {
    if (enumerate_m_partitions(k, 1) != enumerate_partitions(k)) {
      detail << "; m=1 reduction mismatch at k=" << k;
      ok = false;
    }
  }
  if (ok) detail << "; m=1 reduction exact";
  return CheckResult{"m-partition-counts", ok, detail.str()};
}

// The curvature matrix is symmetric PSD with phi* in its null space and
// rank at most min(D, |X|-1); the closed-form fixture is reproduced
// entrywise to 1e-12.
inline CheckResult check_epr_norm_matrix(int instances, int max_alphabet,
                                         std::uint64_t seed) {
  StreamRng rng({seed, 101});
  double max_null = 0.0, max_asym = 0.0, min_eig = 0.0;
  std::ostringstream detail;

  for (int inst = 0; inst < instances; ++inst) {
    const int size =
        static_cast<int>(verify_detail::rand_int(rng, 2, std::min(6, max_alphabet)));
    Alphabet alphabet(size);
    const Distribution p = verify_detail::random_positive_distribution(rng, alphabet);
    LossModel model = [&]() {
      if (inst % 2 == 0) {
        const int dim = static_cast<int>(verify_detail::rand_int(rng, 1, 3));
        Matrix e(size, dim);
        for (int x = 0; x < size; ++x)
          for (int j = 0; j < dim; ++j) e(x, j) = rng.next_normal();
        return quadratic_embedding_model(alphabet, std::move(e));
      }
      return categorical_logloss_model(alphabet);
    }();

    const OptimalParameter opt = optimal_parameter(model, p);
    const EprNormMatrix m = epr_norm_matrix(model, p, opt);
    max_asym = std::max(max_asym, (m.h - m.h.transpose()).cwiseAbs().maxCoeff());

    Eigen::SelfAdjointEigenSolver<Matrix> es(m.h);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
      return CheckResult{"epr-norm-matrix", false, "matrix not PSD"};
    }
    int rank = 0;
    for (int j = 0; j < size; ++j)
      if (es.eigenvalues()[j] > 1e-8 * scale) ++rank;
    if (rank > std::min(model.param_dim, size - 1)) {
      return CheckResult{"epr-norm-matrix", false, "rank exceeds min(D, |X|-1)"};
    }
    const Vector phi_star = p.mass().array().sqrt();
    max_null = std::max(max_null, (m.h * phi_star).cwiseAbs().maxCoeff());
  }

  // Closed-form fixture: two symbols, embeddings 0 and 1, uniform reference.
  Alphabet two(2);
  Matrix emb(2, 1);
  emb << 0.0, 1.0;
  const LossModel fixture = quadratic_embedding_model(two, emb);
  const Distribution half = Distribution::uniform(two);
  const EprNormMatrix hm = epr_norm_matrix(fixture, half, optimal_parameter(fixture, half));
  Matrix expected(2, 2);
  expected << 0.125, -0.125, -0.125, 0.125;
  const double fixture_err = (hm.h - expected).cwiseAbs().maxCoeff();

  const bool ok = max_null <= 1e-8 && max_asym <= 1e-10 && fixture_err <= 1e-12;
  detail << instances << " instances: max |H phi*| " << max_null << ", max asymmetry "
         << max_asym << ", min eigenvalue " << min_eig << ", fixture error "
         << fixture_err;
  return CheckResult{"epr-norm-matrix", ok, detail.str()};
}

// Greedy index assignment attains the exhaustive minimum over all |X|!
// eigenvalue orderings, exactly. The inject hook evaluates the greedy side
// under a deliberately perturbed eigenvalue ordering, which must fail.
inline CheckResult check_greedy_assignment(int instances, int max_alphabet,
                                           std::uint64_t seed, bool inject = false) {
  StreamRng rng({seed, 202});
  const int cap = std::min(6, max_alphabet);
  std::ostringstream detail;
  for (int inst = 0; inst < instances; ++inst) {
    const int k = static_cast<int>(verify_detail::rand_int(rng, 1, 5));
    const auto partitions = enumerate_partitions(k);
    const Partition& partition =
        partitions[static_cast<std::size_t>(verify_detail::rand_int(
            rng, 0, static_cast<std::int64_t>(partitions.size()) - 1))];
    const int groups = static_cast<int>(partition.groups.size());
    if (groups > cap) {
      --inst;  // cannot host this partition in the allowed alphabet; redraw
      continue;
    }
    const int dim = static_cast<int>(verify_detail::rand_int(rng, std::max(2, groups), cap));
    const Vector lambdas = verify_detail::random_lambdas(rng, dim);
    const NodeProfile profile = verify_detail::random_profile(rng, k, 1);

    // Denominators in greedy rank order: group sample-sums descending, then
    // bare n0 for the unassigned directions.
    std::vector<std::int64_t> sums(groups, 0);
    for (int g = 0; g < groups; ++g)
      for (int i : partition.groups[g]) sums[g] += profile.helpers[i];
    std::sort(sums.begin(), sums.end(), std::greater<std::int64_t>());
    std::vector<double> denom(dim, static_cast<double>(profile.n0));
    for (int r = 0; r < groups; ++r) denom[r] += static_cast<double>(sums[r]);

    std::vector<double> greedy_terms(dim);
    for (int r = 0; r < dim; ++r) {
      const int lambda_index = inject ? dim - 1 - r : r;
      greedy_terms[r] = lambdas[lambda_index] / denom[r];
    }
    const double greedy_value = verify_detail::canonical_sum(greedy_terms);

    // Cross-check the closed-form plan against the same term multiset.
    const AllocationPlan plan = greedy_assignment(partition, lambdas, profile);
    std::vector<double> plan_denom(dim, static_cast<double>(profile.n0));
    for (int i = 0; i < k; ++i)
      for (int j : plan.sets[i]) plan_denom[j] += static_cast<double>(profile.helpers[i]);
    std::vector<double> plan_terms(dim);
    for (int j = 0; j < dim; ++j) plan_terms[j] = lambdas[j] / plan_denom[j];
    if (!inject && verify_detail::canonical_sum(plan_terms) != greedy_value) {
      detail << "instance " << inst << ": plan terms disagree with rank evaluation";
      return CheckResult{"greedy-assignment", false, detail.str()};
    }

    std::vector<int> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    double best = greedy_value;
    do {
      std::vector<double> terms(dim);
      for (int r = 0; r < dim; ++r) terms[r] = lambdas[perm[r]] / denom[r];
      best = std::min(best, verify_detail::canonical_sum(terms));
    } while (std::next_permutation(perm.begin(), perm.end()));

    if (greedy_value != best) {
      detail << "instance " << inst << ": greedy " << greedy_value
             << " exceeds exhaustive minimum " << best;
      return CheckResult{"greedy-assignment", false, detail.str()};
    }
  }
  detail << instances << " instances, greedy = permutation minimum exactly";
  return CheckResult{"greedy-assignment", true, detail.str()};
}

// allocate and the brute-force oracle agree on the objective value.
inline CheckResult check_oracle_equivalence(int instances, int max_k, int max_m,
                                            int max_alphabet, std::uint64_t seed) {
  StreamRng rng({seed, 303});
  double max_rel = 0.0;
  std::ostringstream detail;
  for (int inst = 0; inst < instances; ++inst) {
    const int dim = static_cast<int>(verify_detail::rand_int(rng, 2, max_alphabet));
    const int k = static_cast<int>(verify_detail::rand_int(rng, 1, max_k));
    const int m = static_cast<int>(verify_detail::rand_int(rng, 1, std::min(max_m, dim)));
    const Eigensystem eigs{verify_detail::random_lambdas(rng, dim),
                           Matrix::Identity(dim, dim)};
    const NodeProfile profile = verify_detail::random_profile(rng, k, m);

    const AllocationPlan a = allocate(eigs, profile);
    const AllocationPlan b = brute_force_allocate(eigs, profile);
    const double rel = std::abs(a.objective - b.objective) /
                       std::max({1.0, std::abs(a.objective), std::abs(b.objective)});
    max_rel = std::max(max_rel, rel);
    if (rel > 1e-12) {
      detail << "instance " << inst << ": allocate " << a.objective << " vs brute force "
             << b.objective;
      return CheckResult{"oracle-equivalence", false, detail.str()};
    }
  }
  detail << instances << " instances, max relative gap " << max_rel;
  return CheckResult{"oracle-equivalence", true, detail.str()};
}

// Under the Gaussian surrogate the fused estimate is unbiased with
// covariance A^-1: empirical mean within 4 SE per coordinate, empirical
// covariance within 3% relative Frobenius error, over `draws` synthetic
// draws on two fixture plans (m=1 shared and an m=2 explicit plan).
inline CheckResult check_cr_covariance(int draws, std::uint64_t seed) {
  // Fixture: 3 symbols, uniform reference, embeddings with exact spectrum
  // lambda = (4, 1, 0).
  Alphabet three(3);
  Matrix emb(3, 2);
  const double s8 = std::sqrt(8.0), s15 = std::sqrt(1.5);
  emb << -s8, 0.0, 0.5 * s8, -s15, 0.5 * s8, s15;
  const LossModel model = quadratic_embedding_model(three, emb);
  const Distribution p = Distribution::uniform(three);
  const OptimalParameter opt = optimal_parameter(model, p);
  const Eigensystem eigs = eigensystem(epr_norm_matrix(model, p, opt));
  const Vector phi_star = p.mass().array().sqrt();

  struct Setup {
    const char* name;
    std::vector<std::vector<int>> sets;
    std::uint64_t stream;
  };
  const std::vector<Setup> setups = {{"m=1 shared", {{0}, {0}}, 404},
                                     {"m=2 explicit", {{0, 1}, {0, 2}}, 505}};
  NodeProfile profile;
  profile.n0 = 100;
  profile.helpers = {100, 100};

  std::ostringstream detail;
  for (const auto& setup : setups) {
    profile.m = static_cast<int>(setup.sets[0].size());
    AllocationPlan plan;
    plan.sets = setup.sets;
    plan.objective = plan_objective(eigs.lambdas, profile, plan.sets);
    plan.epr = 0.5 * plan.objective;
    const auto matrices = plan_matrices(eigs, plan);

    Matrix a = static_cast<double>(profile.n0) * Matrix::Identity(3, 3);
    for (const auto& f : matrices)
      a += static_cast<double>(profile.helpers[f.helper_id]) * f.columns *
           f.columns.transpose();
    const Matrix a_inv = a.llt().solve(Matrix::Identity(3, 3));

    StreamRng rng({seed, setup.stream});
    Vector mean = Vector::Zero(3);
    Matrix second = Matrix::Zero(3, 3);
    const double root_n0 = std::sqrt(static_cast<double>(profile.n0));
    for (int d = 0; d < draws; ++d) {
      Vector noise(3);
      for (int j = 0; j < 3; ++j) noise[j] = rng.next_normal();
      const InfoVector phi_hat0{three, phi_star + noise / root_n0};
      std::vector<TransmittedStatistic> stats;
      for (const auto& f : matrices) {
        const std::int64_t n_i = profile.helpers[f.helper_id];
        Vector helper_noise(3);
        for (int j = 0; j < 3; ++j) helper_noise[j] = rng.next_normal();
        const InfoVector phi_hat_i{
            three, phi_star + helper_noise / std::sqrt(static_cast<double>(n_i))};
        stats.push_back(transmit(f, phi_hat_i, n_i));
      }
      const FusedEstimate fused = ml_fuse(phi_hat0, profile.n0, stats, matrices);
      mean += fused.phi.coords;
      second += fused.phi.coords * fused.phi.coords.transpose();
    }
    mean /= static_cast<double>(draws);
    Matrix cov = second / static_cast<double>(draws) - mean * mean.transpose();
    cov *= static_cast<double>(draws) / static_cast<double>(draws - 1);

    double max_se = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt(cov(j, j) / static_cast<double>(draws));
      max_se = std::max(max_se, std::abs(mean[j] - phi_star[j]) / se);
    }
    const double cov_rel = (cov - a_inv).norm() / a_inv.norm();
    detail << setup.name << ": max |mean-phi*|/SE " << max_se << ", cov rel err "
           << cov_rel << "; ";
    if (max_se >= 4.0 || cov_rel >= 0.03) {
      return CheckResult{"cr-covariance", false, detail.str()};
    }
  }
  detail << draws << " draws per setup";
  return CheckResult{"cr-covariance", true, detail.str()};
}

// Full verification sweep, in the order the CLI reports them.
inline std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(check_oracle_equivalence(options.instances, options.max_k,
                                             options.max_m, options.max_alphabet,
                                             options.seed));
  results.push_back(check_greedy_assignment(options.instances, options.max_alphabet,
                                            options.seed,
                                            options.inject == "greedy-assignment"));
  results.push_back(check_bell_counts(options.max_k));
  results.push_back(check_m_partition_counts(options.max_k, options.max_m));
  results.push_back(check_cr_covariance(100000, options.seed));
  results.push_back(check_epr_norm_matrix(options.instances, options.max_alphabet,
                                          options.seed));
  return results;
}

}  // namespace epr
