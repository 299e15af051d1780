#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "epr/errors.hpp"

namespace epr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Finite symbol domain. Symbols are addressed by index 0..size-1; labels are
// optional and purely cosmetic (reports, diagnostics).
class Alphabet {
 public:
  explicit Alphabet(int size) : size_(size) { validate(); }

  Alphabet(int size, std::vector<std::string> labels)
      : size_(size), labels_(std::move(labels)) {
    validate();
  }

  int size() const { return size_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::string label(int x) const {
    return labels_.empty() ? "x" + std::to_string(x + 1) : labels_[x];
  }

  bool operator==(const Alphabet& other) const {
    return size_ == other.size_ && labels_ == other.labels_;
  }
  bool operator!=(const Alphabet& other) const { return !(*this == other); }

 private:
  void validate() const {
    if (size_ < 2) throw std::invalid_argument("alphabet size must be at least 2");
    if (!labels_.empty()) {
      if (static_cast<int>(labels_.size()) != size_)
        throw std::invalid_argument("label count does not match alphabet size");
      std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
      if (static_cast<int>(seen.size()) != size_)
        throw std::invalid_argument("alphabet labels must be distinct");
    }
  }

  int size_;
  std::vector<std::string> labels_;
};

// Probability mass function over an Alphabet. Entries are non-negative and
// sum to one within 1e-12; both properties are enforced at construction.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  Distribution(Alphabet alphabet, Vector mass)
      : alphabet_(std::move(alphabet)), mass_(std::move(mass)) {
    if (mass_.size() != alphabet_.size())
      throw std::invalid_argument("mass vector length does not match alphabet size");
    for (int x = 0; x < mass_.size(); ++x) {
      if (!(mass_[x] >= 0.0))
        throw std::invalid_argument("distribution entries must be non-negative");
    }
    if (std::abs(mass_.sum() - 1.0) > kSumTolerance)
      throw std::invalid_argument("distribution entries must sum to 1");
  }

  static Distribution uniform(const Alphabet& alphabet) {
    Vector m = Vector::Constant(alphabet.size(), 1.0 / alphabet.size());
    return Distribution(alphabet, std::move(m));
  }

  static Distribution point_mass(const Alphabet& alphabet, int x) {
    if (x < 0 || x >= alphabet.size())
      throw std::invalid_argument("point mass symbol out of range");
    Vector m = Vector::Zero(alphabet.size());
    m[x] = 1.0;
    return Distribution(alphabet, std::move(m));
  }

  const Alphabet& alphabet() const { return alphabet_; }
  const Vector& mass() const { return mass_; }
  double operator()(int x) const { return mass_[x]; }
  int size() const { return alphabet_.size(); }

  bool strictly_positive() const { return mass_.minCoeff() > 0.0; }

 private:
  Alphabet alphabet_;
  Vector mass_;
};

// Information vector: coordinates of a distribution relative to a strictly
// positive reference, phi(x) = Q(x) / sqrt(P(x)). The reference itself maps
// to phi*(x) = sqrt(P(x)), and every exact image satisfies sum_x phi(x)
// sqrt(P(x)) = 1.
struct InfoVector {
  Alphabet alphabet;
  Vector coords;
};

inline void require_same_alphabet(const Alphabet& a, const Alphabet& b) {
  if (a != b) throw std::invalid_argument("alphabet mismatch");
}

inline InfoVector info_vector(const Distribution& reference, const Distribution& q) {
  require_same_alphabet(reference.alphabet(), q.alphabet());
  if (!reference.strictly_positive())
    throw std::invalid_argument("reference distribution must be strictly positive");
  Vector coords = q.mass().array() / reference.mass().array().sqrt();
  return InfoVector{reference.alphabet(), std::move(coords)};
}

// Reference image phi* = sqrt(P), i.e. info_vector(P, P).
inline InfoVector reference_info_vector(const Distribution& reference) {
  return info_vector(reference, reference);
}

// Local quadratic approximation of KL divergence in information coordinates:
// half the squared Euclidean distance between the two vectors. Agrees with
// the exact divergence to cubic order near the reference.
inline double kl_local(const InfoVector& phi, const InfoVector& phi_star) {
  require_same_alphabet(phi.alphabet, phi_star.alphabet);
  return 0.5 * (phi.coords - phi_star.coords).squaredNorm();
}

// Exact KL divergence D(Q || P) in nats. P must be strictly positive.
inline double kl_divergence(const Distribution& q, const Distribution& p) {
  require_same_alphabet(q.alphabet(), p.alphabet());
  if (!p.strictly_positive())
    throw std::invalid_argument("reference distribution must be strictly positive");
  double sum = 0.0;
  for (int x = 0; x < q.size(); ++x) {
    if (q(x) > 0.0) sum += q(x) * std::log(q(x) / p(x));
  }
  return sum;
}

// Log-density of the isotropic Gaussian surrogate for an empirical
// information vector built from n samples: mean phi*, covariance I/n.
// n is the sampling weight; integer sample counts are the typical argument.
inline double gaussian_log_density(const InfoVector& phi_hat, const InfoVector& phi_star,
                                   double n) {
  require_same_alphabet(phi_hat.alphabet, phi_star.alphabet);
  if (!(n > 0.0)) throw std::invalid_argument("sample count must be positive");
  const double d = static_cast<double>(phi_hat.alphabet.size());
  const double sq = (phi_hat.coords - phi_star.coords).squaredNorm();
  return -0.5 * d * std::log(2.0 * std::numbers::pi / n) - 0.5 * n * sq;
}

}  // namespace epr
