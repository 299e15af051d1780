#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "epr/alphabet.hpp"

namespace epr {

// Deterministic stream addressing: (seed, stream) fully determines the
// generated sequence, independent of platform, call order across streams,
// and thread count. Simulations key streams off (trial id, node index) so
// that plans being compared see common random numbers.
struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256** with splitmix64 state expansion over (seed, stream).
class StreamRng {
 public:
  explicit StreamRng(RandomSeed key) {
    std::uint64_t mix = key.seed;
    state_[0] = detail::splitmix64(mix);
    state_[1] = detail::splitmix64(mix);
    mix ^= 0x6a09e667f3bcc909ULL + key.stream;
    state_[2] = detail::splitmix64(mix);
    state_[3] = detail::splitmix64(mix);
    // A zero state would lock the generator; splitmix output makes this
    // practically impossible, but guard anyway.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; caches the spare deviate.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    while (u1 <= 0.0) u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Empirical distribution of n i.i.d. draws from p. The result is a valid
// Distribution whose mass times n is a vector of integer counts summing to n.
inline Distribution sample_empirical(const Distribution& p, std::int64_t n, RandomSeed seed) {
  if (n <= 0) throw std::invalid_argument("sample count must be positive");
  StreamRng rng(seed);
  const int size = p.size();
  Vector cdf(size);
  double acc = 0.0;
  for (int x = 0; x < size; ++x) {
    acc += p(x);
    cdf[x] = acc;
  }
  Eigen::VectorX<std::int64_t> counts = Eigen::VectorX<std::int64_t>::Zero(size);
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = rng.next_uniform();
    int x = 0;
    while (x + 1 < size && u >= cdf[x]) ++x;
    ++counts[x];
  }
  Vector mass = counts.cast<double>() / static_cast<double>(n);
  return Distribution(p.alphabet(), std::move(mass));
}

}  // namespace epr
