#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <utility>

#include "epr/alphabet.hpp"
#include "epr/random.hpp"

namespace epr {

enum class LossKind { quadratic_embedding, categorical_logloss, user_defined };

inline const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::quadratic_embedding: return "quadratic-embedding";
    case LossKind::categorical_logloss: return "categorical-logloss";
    default: return "user-defined";
  }
}

// A per-symbol smooth loss l(x; theta), theta in R^D, with first and second
// derivatives in theta. Models built from the factories below always carry
// consistent derivatives; user-supplied evaluators are finite-difference
// checked at construction. erm_closed_form, when present, maps a data
// distribution straight to its empirical risk minimizer.
struct LossModel {
  Alphabet alphabet;
  int param_dim = 0;
  LossKind kind = LossKind::user_defined;
  std::function<double(int, const Vector&)> loss;
  std::function<Vector(int, const Vector&)> grad;
  std::function<Matrix(int, const Vector&)> hessian;
  std::function<Vector(const Distribution&)> erm_closed_form;
};

struct DerivativeCheck {
  double max_grad_rel_err = 0.0;
  double max_hess_rel_err = 0.0;
  bool ok = false;
};

// Central-difference validation of grad/hessian at random points. Points are
// drawn as standard normals in R^D, paired with uniformly random symbols.
inline DerivativeCheck check_derivatives(const LossModel& model, RandomSeed seed,
                                         int points = 20, double tol = 1e-5) {
  StreamRng rng(seed);
  const int d = model.param_dim;
  const double h = 1e-5;
  DerivativeCheck rep;
  for (int p = 0; p < points; ++p) {
    const int x = static_cast<int>(rng.next_u64() % model.alphabet.size());
    Vector theta(d);
    for (int j = 0; j < d; ++j) theta[j] = rng.next_normal();

    const Vector g = model.grad(x, theta);
    const Matrix hess = model.hessian(x, theta);
    Vector g_fd(d);
    Matrix h_fd(d, d);
    for (int j = 0; j < d; ++j) {
      Vector lo = theta, hi = theta;
      lo[j] -= h;
      hi[j] += h;
      g_fd[j] = (model.loss(x, hi) - model.loss(x, lo)) / (2.0 * h);
      h_fd.col(j) = (model.grad(x, hi) - model.grad(x, lo)) / (2.0 * h);
    }
    const double g_scale = std::max(1.0, g.norm());
    const double h_scale = std::max(1.0, hess.norm());
    rep.max_grad_rel_err = std::max(rep.max_grad_rel_err, (g_fd - g).norm() / g_scale);
    rep.max_hess_rel_err =
        std::max(rep.max_hess_rel_err, (h_fd - hess).norm() / h_scale);
  }
  rep.ok = rep.max_grad_rel_err <= tol && rep.max_hess_rel_err <= tol;
  return rep;
}

// l(x; theta) = 0.5 * ||theta - e(x)||^2 for a fixed embedding e: X -> R^D.
// The population minimizer is the P-mean of the embeddings and the empirical
// risk minimizer is the Q-mean, both in closed form.
inline LossModel quadratic_embedding_model(const Alphabet& alphabet, Matrix embeddings) {
  if (embeddings.rows() != alphabet.size())
    throw std::invalid_argument("embedding row count does not match alphabet size");
  if (embeddings.cols() < 1)
    throw std::invalid_argument("embedding dimension must be at least 1");
  const int d = static_cast<int>(embeddings.cols());
  LossModel m{alphabet, d, LossKind::quadratic_embedding, {}, {}, {}, {}};
  m.loss = [embeddings](int x, const Vector& theta) {
    return 0.5 * (theta - embeddings.row(x).transpose()).squaredNorm();
  };
  m.grad = [embeddings](int x, const Vector& theta) -> Vector {
    return theta - embeddings.row(x).transpose();
  };
  m.hessian = [d](int, const Vector&) -> Matrix { return Matrix::Identity(d, d); };
  m.erm_closed_form = [embeddings](const Distribution& q) -> Vector {
    return embeddings.transpose() * q.mass();
  };
  return m;
}

namespace detail {

inline Vector softmax(const Vector& theta) {
  const double m = theta.maxCoeff();
  Vector e = (theta.array() - m).exp();
  return e / e.sum();
}

inline double log_sum_exp(const Vector& theta) {
  const double m = theta.maxCoeff();
  return m + std::log((theta.array() - m).exp().sum());
}

}  // namespace detail

// l(x; theta) = -log softmax(theta)_x with D = |X|. The population minimizer
// is theta* = log P (up to an additive constant; the closed form pins that
// gauge), and the exact excess risk of the empirical minimizer log Q is the
// KL divergence D(P || Q).
inline LossModel categorical_logloss_model(const Alphabet& alphabet) {
  const int d = alphabet.size();
  LossModel m{alphabet, d, LossKind::categorical_logloss, {}, {}, {}, {}};
  m.loss = [](int x, const Vector& theta) {
    return detail::log_sum_exp(theta) - theta[x];
  };
  m.grad = [](int x, const Vector& theta) -> Vector {
    Vector s = detail::softmax(theta);
    s[x] -= 1.0;
    return s;
  };
  m.hessian = [](int, const Vector& theta) -> Matrix {
    const Vector s = detail::softmax(theta);
    Matrix h = -s * s.transpose();
    h.diagonal() += s;
    return h;
  };
  m.erm_closed_form = [](const Distribution& q) -> Vector {
    if (!q.strictly_positive())
      throw NumericError(
          "log-loss minimizer does not exist: data distribution has a zero entry");
    return q.mass().array().log();
  };
  return m;
}

// Wraps user-supplied evaluators, finite-difference checking the derivatives
// before accepting them.
inline LossModel user_defined_model(const Alphabet& alphabet, int param_dim,
                                    std::function<double(int, const Vector&)> loss,
                                    std::function<Vector(int, const Vector&)> grad,
                                    std::function<Matrix(int, const Vector&)> hessian,
                                    RandomSeed check_seed = {0x5eed, 0}) {
  if (param_dim < 1) throw std::invalid_argument("parameter dimension must be at least 1");
  LossModel m{alphabet, param_dim, LossKind::user_defined, std::move(loss),
              std::move(grad), std::move(hessian), {}};
  const DerivativeCheck rep = check_derivatives(m, check_seed);
  if (!rep.ok) {
    std::ostringstream msg;
    msg << "user-defined loss failed derivative checks: grad rel err "
        << rep.max_grad_rel_err << ", hessian rel err " << rep.max_hess_rel_err;
    throw std::invalid_argument(msg.str());
  }
  return m;
}

}  // namespace epr
