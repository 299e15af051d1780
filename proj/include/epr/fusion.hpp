#pragma once

#include <Eigen/Cholesky>

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "epr/allocation.hpp"

namespace epr {

// Orthonormal columns spanning the directions helper `helper_id` projects
// its empirical information vector onto before transmitting.
struct StatisticMatrix {
  int helper_id = 0;  // 0-based
  Matrix columns;     // |X| x m, orthonormal
};

// What a helper actually sends: the inner products of its empirical
// information vector with its statistic matrix columns, plus the sample
// count behind them (which sets the weight in fusion).
struct TransmittedStatistic {
  int helper_id = 0;
  Vector values;
  std::int64_t sample_count = 1;
};

// Maximum-likelihood fusion output. information_matrix is
// A = n0 I + sum_i n_i F_i F_i^T, the precision of the fused estimate under
// the Gaussian surrogate. predicted_mse (tr(H A^-1)) depends on the
// curvature matrix, so the pipeline that owns H fills it in.
struct FusedEstimate {
  InfoVector phi;
  Matrix information_matrix;
  std::optional<double> predicted_mse;
};

namespace detail {

inline void require_orthonormal(const StatisticMatrix& f, int dim) {
  if (f.columns.rows() != dim)
    throw std::invalid_argument("statistic matrix row count does not match alphabet size");
  if (f.columns.cols() < 1)
    throw std::invalid_argument("statistic matrix must have at least one column");
  const Matrix gram = f.columns.transpose() * f.columns;
  const Matrix eye = Matrix::Identity(gram.rows(), gram.cols());
  if ((gram - eye).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("statistic matrix columns are not orthonormal");
}

}  // namespace detail

// Builds one statistic matrix per helper from an eigen-direction plan:
// helper i's columns are the eigenvectors indexed by plan.sets[i]. Helpers
// appear in plan order; an empty plan yields no matrices.
inline std::vector<StatisticMatrix> plan_matrices(const Eigensystem& eigs,
                                                  const AllocationPlan& plan) {
  const int dim = static_cast<int>(eigs.lambdas.size());
  std::vector<StatisticMatrix> out;
  out.reserve(plan.sets.size());
  for (int i = 0; i < static_cast<int>(plan.sets.size()); ++i) {
    const auto& set = plan.sets[i];
    if (set.empty()) throw std::invalid_argument("plan assigns no directions to a helper");
    Matrix cols(dim, static_cast<int>(set.size()));
    for (int c = 0; c < static_cast<int>(set.size()); ++c) {
      const int j = set[c];
      if (j < 0 || j >= dim)
        throw std::invalid_argument("eigen index out of range in plan");
      cols.col(c) = eigs.vectors.col(j);
    }
    out.push_back(StatisticMatrix{i, std::move(cols)});
  }
  return out;
}

// Projects a helper's empirical information vector for transmission.
inline TransmittedStatistic transmit(const StatisticMatrix& f, const InfoVector& phi_hat,
                                     std::int64_t sample_count) {
  if (phi_hat.coords.size() != f.columns.rows())
    throw std::invalid_argument("information vector dimension does not match matrix");
  if (sample_count < 1)
    throw std::invalid_argument("helper sample count must be at least 1");
  return TransmittedStatistic{f.helper_id, f.columns.transpose() * phi_hat.coords,
                              sample_count};
}

// Maximum-likelihood fusion of the local empirical information vector with
// the helper projections, under the Gaussian surrogate:
//   A phi = n0 phi_hat0 + sum_i n_i F_i s_i,  A = n0 I + sum_i n_i F_i F_i^T.
// A is applied by a positive-definite solve, never an explicit inverse.
// as_printed = true drops the n_i weights from the data term only (a
// historical variant kept for comparison; it is biased unless every
// n_i = 1, and the default is the corrected weighted form).
inline FusedEstimate ml_fuse(const InfoVector& phi_hat0, std::int64_t n0,
                             const std::vector<TransmittedStatistic>& statistics,
                             const std::vector<StatisticMatrix>& matrices,
                             bool as_printed = false) {
  if (n0 < 1) throw std::invalid_argument("target sample count must be at least 1");
  if (statistics.size() != matrices.size())
    throw std::invalid_argument("statistic and matrix counts differ");
  const int dim = static_cast<int>(phi_hat0.coords.size());

  if (statistics.empty()) {
    // No helpers: the fused estimate is the local one, bit for bit.
    return FusedEstimate{phi_hat0, static_cast<double>(n0) * Matrix::Identity(dim, dim),
                         std::nullopt};
  }

  std::unordered_map<int, const StatisticMatrix*> by_id;
  for (const auto& f : matrices) {
    detail::require_orthonormal(f, dim);
    if (!by_id.emplace(f.helper_id, &f).second)
      throw std::invalid_argument("duplicate statistic matrix for a helper");
  }

  Matrix a = static_cast<double>(n0) * Matrix::Identity(dim, dim);
  Vector b = static_cast<double>(n0) * phi_hat0.coords;
  for (const auto& s : statistics) {
    const auto it = by_id.find(s.helper_id);
    if (it == by_id.end())
      throw std::invalid_argument("transmitted statistic without a matching matrix");
    const StatisticMatrix& f = *it->second;
    if (s.values.size() != f.columns.cols())
      throw std::invalid_argument("transmitted statistic has the wrong length");
    if (s.sample_count < 1)
      throw std::invalid_argument("helper sample count must be at least 1");
    const double n_i = static_cast<double>(s.sample_count);
    a.noalias() += n_i * f.columns * f.columns.transpose();
    b.noalias() += (as_printed ? 1.0 : n_i) * (f.columns * s.values);
  }

  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError("fusion precision matrix is not positive definite");
  Vector phi = llt.solve(b);
  return FusedEstimate{InfoVector{phi_hat0.alphabet, std::move(phi)}, std::move(a),
                       std::nullopt};
}

// Predicted mean-square error tr(H A^-1) of the fused estimate, with
// A = n0 I + sum_i n_i F_i F_i^T. The predicted excess risk is half of it.
// For plans made of eigenvectors of H this equals plan_objective.
inline double predicted_mse(const EprNormMatrix& m,
                            const std::vector<StatisticMatrix>& matrices,
                            const NodeProfile& profile) {
  profile.validate();
  const int dim = static_cast<int>(m.h.rows());
  Matrix a = static_cast<double>(profile.n0) * Matrix::Identity(dim, dim);
  for (const auto& f : matrices) {
    detail::require_orthonormal(f, dim);
    if (f.helper_id < 0 || f.helper_id >= profile.k())
      throw std::invalid_argument("statistic matrix helper id out of range");
    const double n_i = static_cast<double>(profile.helpers[f.helper_id]);
    a.noalias() += n_i * f.columns * f.columns.transpose();
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError("fusion precision matrix is not positive definite");
  return llt.solve(m.h).trace();
}

inline double predicted_mse(const EprNormMatrix& m, const Eigensystem& eigs,
                            const AllocationPlan& plan, const NodeProfile& profile) {
  return predicted_mse(m, plan_matrices(eigs, plan), profile);
}

// Maps a fused information vector back to a distribution over the alphabet:
// Q(x) = phi(x) sqrt(P(x)), clamping any negative mass to zero and
// renormalizing. The clamped-away (pre-normalization) negative mass is
// reported alongside, as a diagnostic of how non-local the estimate was.
struct Reconstruction {
  Distribution q;
  double mass_defect = 0.0;
};

inline Reconstruction reconstruct_distribution(const InfoVector& phi_tilde,
                                               const Distribution& reference) {
  require_same_alphabet(phi_tilde.alphabet, reference.alphabet());
  if (!reference.strictly_positive())
    throw std::invalid_argument("reference distribution must be strictly positive");
  Vector raw = phi_tilde.coords.array() * reference.mass().array().sqrt();
  double defect = 0.0;
  for (int x = 0; x < raw.size(); ++x) {
    if (raw[x] < 0.0) {
      defect -= raw[x];
      raw[x] = 0.0;
    }
  }
  const double total = raw.sum();
  if (!(total > 0.0)) throw NumericError("reconstructed distribution has no positive mass");
  return Reconstruction{Distribution(reference.alphabet(), raw / total), defect};
}

}  // namespace epr
