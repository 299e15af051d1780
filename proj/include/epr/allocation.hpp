#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "epr/eigensystem.hpp"
#include "epr/partitions.hpp"

namespace epr {

// Sample counts: n0 at the estimating node, n[i] at helper i, all >= 1.
// m is the number of one-dimensional statistics each helper may transmit.
struct NodeProfile {
  std::int64_t n0 = 1;
  std::vector<std::int64_t> helpers;
  int m = 1;

  int k() const { return static_cast<int>(helpers.size()); }

  void validate() const {
    if (n0 < 1) throw std::invalid_argument("target sample count must be at least 1");
    for (std::int64_t n : helpers)
      if (n < 1) throw std::invalid_argument("helper sample counts must be at least 1");
    if (m < 1) throw std::invalid_argument("statistics budget m must be at least 1");
  }
};

// Assignment of eigen-direction indices (0-based, into the descending
// spectrum) to helpers: helper i transmits the projections onto the
// directions in sets[i]. The objective is
//   sum_j lambda_j / (n0 + sum_{i : j in sets[i]} n_i),
// and epr is half of it: the predicted excess risk of the fused estimate.
struct AllocationPlan {
  std::vector<std::vector<int>> sets;
  double objective = 0.0;
  double epr = 0.0;
};

inline double plan_objective(const Vector& lambdas, const NodeProfile& profile,
                             const std::vector<std::vector<int>>& sets) {
  profile.validate();
  if (static_cast<int>(sets.size()) != profile.k())
    throw std::invalid_argument("plan must assign a set to every helper");
  const int dim = static_cast<int>(lambdas.size());
  std::vector<double> denom(dim, static_cast<double>(profile.n0));
  for (int i = 0; i < profile.k(); ++i) {
    for (int j : sets[i]) {
      if (j < 0 || j >= dim)
        throw std::invalid_argument("eigen index out of range in plan");
      denom[j] += static_cast<double>(profile.helpers[i]);
    }
  }
  double obj = 0.0;
  for (int j = 0; j < dim; ++j) obj += lambdas[j] / denom[j];
  return obj;
}

namespace detail {

// Group order used by the greedy rule: descending total sample count, ties
// broken by smallest member so the result does not depend on input order.
inline std::vector<int> greedy_group_order(const Partition& partition,
                                           const NodeProfile& profile) {
  const int groups = static_cast<int>(partition.groups.size());
  std::vector<std::int64_t> sums(groups, 0);
  for (int g = 0; g < groups; ++g) {
    for (int i : partition.groups[g]) {
      if (i < 0 || i >= profile.k())
        throw std::invalid_argument("helper index out of range in partition");
      sums[g] += profile.helpers[i];
    }
  }
  std::vector<int> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sums[a] != sums[b]) return sums[a] > sums[b];
    return partition.groups[a].front() < partition.groups[b].front();
  });
  return order;
}

}  // namespace detail

// Optimal index assignment for a fixed grouping of the helpers: the group
// with the r-th largest total sample count transmits eigen direction r.
// Every helper in a group shares that group's directions, so a helper ends
// up with exactly one direction per group it belongs to.
inline AllocationPlan greedy_assignment(const Partition& partition, const Vector& lambdas,
                                        const NodeProfile& profile) {
  profile.validate();
  const int dim = static_cast<int>(lambdas.size());
  const int groups = static_cast<int>(partition.groups.size());
  if (groups > dim)
    throw InfeasibleError("partition has more groups than eigen directions");

  const std::vector<int> order = detail::greedy_group_order(partition, profile);
  AllocationPlan plan;
  plan.sets.assign(profile.k(), {});
  for (int rank = 0; rank < groups; ++rank) {
    for (int i : partition.groups[order[rank]]) plan.sets[i].push_back(rank);
  }
  for (auto& s : plan.sets) std::sort(s.begin(), s.end());
  plan.objective = plan_objective(lambdas, profile, plan.sets);
  plan.epr = 0.5 * plan.objective;
  return plan;
}

// Searches every m-th partition of the helpers, assigns indices greedily
// within each, and keeps the best objective. Ties keep the earliest
// partition in enumeration order. k = 0 degenerates to the no-helper plan.
inline AllocationPlan allocate(const Eigensystem& eigs, const NodeProfile& profile) {
  profile.validate();
  const int dim = static_cast<int>(eigs.lambdas.size());
  if (profile.k() == 0) {
    AllocationPlan plan;
    plan.objective = plan_objective(eigs.lambdas, profile, {});
    plan.epr = 0.5 * plan.objective;
    return plan;
  }
  if (profile.m > dim)
    throw InfeasibleError("statistics budget m exceeds the number of eigen directions");

  std::optional<AllocationPlan> best;
  for_each_m_partition(profile.k(), profile.m, [&](const Partition& partition) {
    if (static_cast<int>(partition.groups.size()) > dim) return;  // cannot host the groups
    AllocationPlan plan = greedy_assignment(partition, eigs.lambdas, profile);
    if (!best || plan.objective < best->objective) best = std::move(plan);
  });
  if (!best) throw InfeasibleError("no feasible partition for this instance");
  return *best;
}

namespace detail {

inline std::uint64_t subset_choices(int pool, int pick) {
  // C(pool, pick), saturating well below overflow for the sizes involved.
  std::uint64_t num = 1;
  for (int i = 0; i < pick; ++i) num = num * static_cast<std::uint64_t>(pool - i) / (i + 1);
  return num;
}

struct BruteForceSearch {
  const Vector* lambdas = nullptr;
  const NodeProfile* profile = nullptr;
  int candidates = 0;
  std::vector<double> denom;         // current denominator per eigen index
  std::vector<std::vector<int>> sets;
  double objective = 0.0;            // objective under current denominators
  std::optional<AllocationPlan> best;

  void run(int helper) {
    if (helper == profile->k()) {
      if (!best || objective < best->objective) {
        best = AllocationPlan{sets, objective, 0.5 * objective};
      }
      return;
    }
    std::vector<int> pick(profile->m);
    choose(helper, 0, 0, pick);
  }

  void choose(int helper, int start, int depth, std::vector<int>& pick) {
    if (depth == profile->m) {
      const double n = static_cast<double>(profile->helpers[helper]);
      for (int j : pick) {
        objective -= (*lambdas)[j] / denom[j];
        denom[j] += n;
        objective += (*lambdas)[j] / denom[j];
      }
      sets[helper] = pick;
      run(helper + 1);
      for (int j : pick) {
        objective -= (*lambdas)[j] / denom[j];
        denom[j] -= n;
        objective += (*lambdas)[j] / denom[j];
      }
      return;
    }
    for (int j = start; j <= candidates - (profile->m - depth); ++j) {
      pick[depth] = j;
      choose(helper, j + 1, depth + 1, pick);
    }
  }
};

}  // namespace detail

// Reference optimizer: exhaustively tries every assignment of m distinct
// candidate directions to every helper, independent of the partition
// machinery. Candidates are the top min(m*k + 1, |X|) directions, which is
// always enough to contain an optimal assignment. Ties keep the first
// assignment in lexicographic order. Guarded against oversized instances.
inline AllocationPlan brute_force_allocate(const Eigensystem& eigs,
                                           const NodeProfile& profile) {
  profile.validate();
  const int dim = static_cast<int>(eigs.lambdas.size());
  const int k = profile.k();
  if (k == 0) {
    AllocationPlan plan;
    plan.objective = plan_objective(eigs.lambdas, profile, {});
    plan.epr = 0.5 * plan.objective;
    return plan;
  }
  if (profile.m > dim)
    throw InfeasibleError("statistics budget m exceeds the number of eigen directions");

  const int candidates = std::min(profile.m * k + 1, dim);
  const std::uint64_t per_helper = detail::subset_choices(candidates, profile.m);
  std::uint64_t total = 1;
  for (int i = 0; i < k; ++i) {
    total *= per_helper;
    if (total > 10'000'000ULL)
      throw InfeasibleError("instance too large for the exhaustive reference search");
  }

  detail::BruteForceSearch search;
  search.lambdas = &eigs.lambdas;
  search.profile = &profile;
  search.candidates = candidates;
  search.denom.assign(dim, static_cast<double>(profile.n0));
  search.sets.assign(k, {});
  double base = 0.0;
  for (int j = 0; j < dim; ++j) base += eigs.lambdas[j] / search.denom[j];
  search.objective = base;
  search.run(0);
  // Recompute the winner's objective in one pass; the incremental updates
  // used during the search carry rounding that the canonical sum does not.
  AllocationPlan plan = *search.best;
  plan.objective = plan_objective(eigs.lambdas, profile, plan.sets);
  plan.epr = 0.5 * plan.objective;
  return plan;
}

enum class TwoNodeStrategy { shared, separate };

inline const char* to_string(TwoNodeStrategy s) {
  return s == TwoNodeStrategy::shared ? "shared" : "separate";
}

// Closed-form rule for k = 2, m = 1: with n1 >= n2 (swapped internally if
// needed), both helpers should transmit the leading direction iff
//   lambda1 / lambda2 > (n0 + n1) (n0 + n1 + n2) / (n0 (n2 + n0)).
// Ties fall to separate; lambda2 = 0 makes the second direction worthless,
// so that degenerate case is shared.
inline TwoNodeStrategy two_node_strategy_test(double lambda1, double lambda2,
                                              std::int64_t n0, std::int64_t n1,
                                              std::int64_t n2) {
  if (!(lambda1 >= lambda2) || !(lambda2 >= 0.0))
    throw std::invalid_argument("eigenvalues must satisfy lambda1 >= lambda2 >= 0");
  if (n0 < 1 || n1 < 1 || n2 < 1)
    throw std::invalid_argument("sample counts must be at least 1");
  if (lambda2 == 0.0) return TwoNodeStrategy::shared;
  if (n1 < n2) std::swap(n1, n2);
  const double a = static_cast<double>(n0);
  const double b = static_cast<double>(n1);
  const double c = static_cast<double>(n2);
  const double threshold = ((a + b) * (a + b + c)) / (a * (c + a));
  return lambda1 / lambda2 > threshold ? TwoNodeStrategy::shared
                                       : TwoNodeStrategy::separate;
}

}  // namespace epr
