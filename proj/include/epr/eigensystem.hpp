#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "epr/risk.hpp"

namespace epr {

// Spectral decomposition of the curvature matrix H with a deterministic
// presentation: eigenvalues descending, eigenvectors as matching orthonormal
// columns. Tiny negative eigenvalues (roundoff) are clamped to zero; each
// vector's first coordinate of non-negligible magnitude is made positive, and
// ties between equal eigenvalues are ordered by lexicographic comparison of
// the vectors. Equal inputs therefore always produce identical output.
struct Eigensystem {
  Vector lambdas;  // descending, all >= 0
  Matrix vectors;  // column i pairs with lambdas[i]
};

inline constexpr double kEigenClampTol = 1e-10;

namespace detail {

inline void fix_eigenvector_sign(Eigen::Ref<Vector> v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

inline bool vector_lex_less(const Vector& a, const Vector& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

}  // namespace detail

inline Eigensystem eigensystem(const EprNormMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.h);
  if (es.info() != Eigen::Success)
    throw NumericError("eigendecomposition of the curvature matrix failed");

  const int n = static_cast<int>(m.h.rows());
  std::vector<double> lambdas(n);
  std::vector<Vector> vectors(n);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    double lam = es.eigenvalues()[i];
    if (lam < -kEigenClampTol * scale)
      throw std::invalid_argument("curvature matrix is not positive semi-definite");
    if (lam < 0.0) lam = 0.0;
    lambdas[i] = lam;
    vectors[i] = es.eigenvectors().col(i);
    detail::fix_eigenvector_sign(vectors[i]);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (lambdas[a] != lambdas[b]) return lambdas[a] > lambdas[b];
    return detail::vector_lex_less(vectors[a], vectors[b]);
  });

  Eigensystem out;
  out.lambdas.resize(n);
  out.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.lambdas[i] = lambdas[order[i]];
    out.vectors.col(i) = vectors[order[i]];
  }
  return out;
}

}  // namespace epr
