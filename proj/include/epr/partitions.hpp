#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "epr/errors.hpp"

namespace epr {

// A partition-like family of non-empty groups of helper indices (0-based).
// For ordinary set partitions every index appears in exactly one group; for
// an m-th partition every index appears in exactly m distinct groups. Groups
// are stored with ascending members and the family is kept in a canonical
// (lexicographically sorted) order, so equal families compare equal.
struct Partition {
  std::vector<std::vector<int>> groups;

  bool operator==(const Partition& other) const { return groups == other.groups; }
  bool operator<(const Partition& other) const { return groups < other.groups; }
};

// Enumeration guards: partition families grow super-exponentially in k, so
// refuse instances that would enumerate without bound.
inline constexpr int kMaxPartitionHelpers = 12;
inline constexpr std::uint64_t kMaxMPartitionNodes = 20'000'000;

// Visits all set partitions of {0..k-1} in restricted-growth-string order:
// the all-in-one-group partition first, all-singletons last. Group g of each
// emitted partition collects the indices whose growth-string value is g, so
// groups are ordered by their smallest member.
template <typename F>
void for_each_partition(int k, F&& fn) {
  if (k < 1) throw std::invalid_argument("partition enumeration requires k >= 1");
  if (k > kMaxPartitionHelpers)
    throw InfeasibleError("helper count too large for exhaustive partition search");
  std::vector<int> code(k, 0);   // restricted growth string
  std::vector<int> prefix_max(k, 0);
  auto emit = [&]() {
    Partition part;
    const int groups = prefix_max[k - 1] + 1;
    part.groups.assign(groups, {});
    for (int i = 0; i < k; ++i) part.groups[code[i]].push_back(i);
    fn(part);
  };
  emit();
  while (true) {
    int i = k - 1;
    while (i > 0 && code[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) break;
    ++code[i];
    prefix_max[i] = std::max(prefix_max[i - 1], code[i]);
    for (int j = i + 1; j < k; ++j) {
      code[j] = 0;
      prefix_max[j] = prefix_max[j - 1];
    }
    emit();
  }
}

inline std::vector<Partition> enumerate_partitions(int k) {
  std::vector<Partition> out;
  for_each_partition(k, [&](const Partition& p) { out.push_back(p); });
  return out;
}

namespace detail {

struct MPartitionSearch {
  int k = 0;
  int m = 0;
  std::uint64_t nodes = 0;
  std::vector<std::vector<int>> groups;
  std::set<std::vector<std::vector<int>>> seen;

  void run(int index) {
    if (++nodes > kMaxMPartitionNodes)
      throw InfeasibleError("m-th partition search exceeded its enumeration budget");
    if (index == k) {
      auto canonical = groups;
      std::sort(canonical.begin(), canonical.end());
      seen.insert(std::move(canonical));
      return;
    }
    const int existing = static_cast<int>(groups.size());
    // index joins `join` existing groups and opens m - join fresh singletons.
    for (int join = std::min(m, existing); join >= 0; --join) {
      std::vector<int> pick(join);
      choose_existing(index, join, 0, 0, pick);
    }
  }

  void choose_existing(int index, int join, int start, int depth, std::vector<int>& pick) {
    if (depth == join) {
      for (int g : pick) groups[g].push_back(index);
      for (int f = 0; f < m - join; ++f) groups.push_back({index});
      run(index + 1);
      for (int f = 0; f < m - join; ++f) groups.pop_back();
      for (int g : pick) groups[g].pop_back();
      return;
    }
    const int existing = static_cast<int>(groups.size());
    for (int g = start; g <= existing - (join - depth); ++g) {
      pick[depth] = g;
      choose_existing(index, join, g + 1, depth + 1, pick);
    }
  }
};

}  // namespace detail

// Visits all m-th partitions of {0..k-1}: multisets of non-empty groups in
// which every index appears in exactly m distinct groups. For m = 1 this is
// exactly for_each_partition (same order); for m >= 2 families are emitted
// in lexicographic order of their canonical form, each exactly once.
template <typename F>
void for_each_m_partition(int k, int m, F&& fn) {
  if (k < 1 || m < 1)
    throw std::invalid_argument("m-th partition enumeration requires k >= 1 and m >= 1");
  if (m == 1) {
    for_each_partition(k, fn);
    return;
  }
  detail::MPartitionSearch search;
  search.k = k;
  search.m = m;
  search.run(0);
  for (const auto& groups : search.seen) fn(Partition{groups});
}

inline std::vector<Partition> enumerate_m_partitions(int k, int m) {
  std::vector<Partition> out;
  for_each_m_partition(k, m, [&](const Partition& p) { out.push_back(p); });
  return out;
}

}  // namespace epr
