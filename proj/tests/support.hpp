#pragma once

// Shared helpers for the test suites: small literal builders, simplex
// perturbation draws, and a least-squares slope for log-log order checks.

#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "epr/alphabet.hpp"
#include "epr/random.hpp"

namespace epr::test {

inline Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Distribution make_dist(std::initializer_list<double> mass) {
  return Distribution(Alphabet(static_cast<int>(mass.size())), make_vector(mass));
}

// Zero-sum Gaussian direction scaled to the requested Euclidean length.
// Adding it to a distribution whose smallest entry exceeds `radius` keeps
// the result on the simplex.
inline Vector simplex_perturbation(StreamRng& rng, int size, double radius) {
  Vector d(size);
  do {
    for (int x = 0; x < size; ++x) d[x] = rng.next_normal();
    d.array() -= d.mean();
  } while (d.norm() == 0.0);
  return d * (radius / d.norm());
}

// Least-squares slope of y against x (both already in log space).
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope fit needs spread in x");
  return sxy / sxx;
}

}  // namespace epr::test
