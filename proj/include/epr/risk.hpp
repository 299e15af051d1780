#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <utility>

#include "epr/alphabet.hpp"
#include "epr/loss_model.hpp"

namespace epr {

inline constexpr double kDefaultSolverTol = 1e-10;
inline constexpr int kDefaultSolverMaxIters = 200;
inline constexpr double kDefaultPinvTol = 1e-10;

inline void require_param_dim(const LossModel& model, const Vector& theta) {
  if (theta.size() != model.param_dim)
    throw std::invalid_argument("parameter dimension mismatch");
}

inline double population_risk(const LossModel& model, const Distribution& dist,
                              const Vector& theta) {
  require_same_alphabet(model.alphabet, dist.alphabet());
  require_param_dim(model, theta);
  double r = 0.0;
  for (int x = 0; x < dist.size(); ++x) {
    if (dist(x) != 0.0) r += dist(x) * model.loss(x, theta);
  }
  return r;
}

inline Vector population_gradient(const LossModel& model, const Distribution& dist,
                                  const Vector& theta) {
  require_same_alphabet(model.alphabet, dist.alphabet());
  require_param_dim(model, theta);
  Vector g = Vector::Zero(model.param_dim);
  for (int x = 0; x < dist.size(); ++x) {
    if (dist(x) != 0.0) g += dist(x) * model.grad(x, theta);
  }
  return g;
}

inline Matrix population_hessian(const LossModel& model, const Distribution& dist,
                                 const Vector& theta) {
  require_same_alphabet(model.alphabet, dist.alphabet());
  require_param_dim(model, theta);
  Matrix h = Matrix::Zero(model.param_dim, model.param_dim);
  for (int x = 0; x < dist.size(); ++x) {
    if (dist(x) != 0.0) h += dist(x) * model.hessian(x, theta);
  }
  return 0.5 * (h + h.transpose());
}

// Moore-Penrose pseudo-inverse of a symmetric matrix via its spectral
// decomposition; eigenvalues below rel_tol times the largest magnitude are
// treated as exact zeros.
inline Matrix pseudo_inverse(const Matrix& sym, double rel_tol = kDefaultPinvTol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed in pseudo-inverse");
  const Vector& ev = es.eigenvalues();
  const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) > cutoff) inv[i] = 1.0 / ev[i];
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Empirical risk minimizer for data distribution q. Uses the model's closed
// form when present (and allowed); otherwise a damped Newton iteration with
// a pseudo-inverse step, Armijo backtracking, and a gradient-step fallback.
inline Vector erm_solve(const LossModel& model, const Distribution& q,
                        double tol = kDefaultSolverTol,
                        int max_iters = kDefaultSolverMaxIters,
                        bool allow_closed_form = true) {
  require_same_alphabet(model.alphabet, q.alphabet());
  if (allow_closed_form && model.erm_closed_form) return model.erm_closed_form(q);

  Vector theta = Vector::Zero(model.param_dim);
  for (int it = 0; it < max_iters; ++it) {
    const Vector g = population_gradient(model, q, theta);
    if (g.norm() <= tol) return theta;
    const Matrix h = population_hessian(model, q, theta);
    Vector step = -pseudo_inverse(h, 1e-12) * g;
    double slope = g.dot(step);
    if (!(slope < 0.0)) {  // not a descent direction; fall back to steepest descent
      step = -g;
      slope = g.dot(step);
    }
    const double f0 = population_risk(model, q, theta);
    // Near the optimum the true decrease of a full Newton step drops below
    // the floating-point resolution of the risk itself; a strict Armijo test
    // would reject it and stall one quadratic step short of the floor. The
    // slack admits such sub-ulp steps while leaving material steps gated.
    const double f_slack =
        4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));
    double t = 1.0;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      const Vector cand = theta + t * step;
      const double f = population_risk(model, q, cand);
      if (std::isfinite(f) && f <= f0 + 1e-4 * t * slope + f_slack) {
        theta = cand;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted)
      throw NumericError("empirical risk minimization failed: line search stalled");
  }
  if (population_gradient(model, q, theta).norm() <= tol) return theta;
  throw NumericError("empirical risk minimization did not converge");
}

// Population minimizer theta* together with the risk floor it attains.
struct OptimalParameter {
  Vector theta_star;
  double risk_at_optimum = 0.0;
  double gradient_norm = 0.0;
};

inline OptimalParameter optimal_parameter(const LossModel& model, const Distribution& p,
                                          double tol = kDefaultSolverTol,
                                          int max_iters = kDefaultSolverMaxIters) {
  Vector theta = erm_solve(model, p, tol, max_iters);
  const double gn = population_gradient(model, p, theta).norm();
  if (gn > std::max(tol, 1e-9))
    throw NumericError("population risk minimizer is not stationary");
  const double risk = population_risk(model, p, theta);
  return OptimalParameter{std::move(theta), risk, gn};
}

// Symmetric |X| x |X| matrix H with entries
//   H(x1, x2) = sqrt(P(x1) P(x2)) grad l(x1)^T Theta^+ grad l(x2),
// where Theta is the P-average Hessian at theta*. One half of the quadratic
// form d^T H d in information coordinates is the second-order excess risk of
// the parameter matched to the perturbed distribution.
struct EprNormMatrix {
  Matrix h;             // |X| x |X|, symmetric PSD
  Matrix theta_matrix;  // D x D aggregate Hessian at theta*
  double pinv_tolerance = kDefaultPinvTol;
};

namespace detail {

// Columns are sqrt(P(x)) grad l(x; theta*): the D x |X| map from information
// coordinates back into parameter-gradient space.
inline Matrix scaled_gradient_columns(const LossModel& model, const Distribution& p,
                                      const OptimalParameter& opt) {
  Matrix g(model.param_dim, p.size());
  for (int x = 0; x < p.size(); ++x)
    g.col(x) = std::sqrt(p(x)) * model.grad(x, opt.theta_star);
  return g;
}

}  // namespace detail

inline EprNormMatrix epr_norm_matrix(const LossModel& model, const Distribution& p,
                                     const OptimalParameter& opt,
                                     double pinv_tol = kDefaultPinvTol) {
  require_same_alphabet(model.alphabet, p.alphabet());
  require_param_dim(model, opt.theta_star);
  const Matrix theta_matrix = population_hessian(model, p, opt.theta_star);
  if (theta_matrix.cwiseAbs().maxCoeff() == 0.0)
    throw NumericError("aggregate Hessian at the optimum is zero; curvature metric undefined");
  const Matrix pinv = pseudo_inverse(theta_matrix, pinv_tol);
  const Matrix g = detail::scaled_gradient_columns(model, p, opt);
  Matrix h = g.transpose() * pinv * g;
  h = 0.5 * (h + h.transpose());
  return EprNormMatrix{std::move(h), theta_matrix, pinv_tol};
}

// First-order response of the fitted parameter to a perturbation of the
// information vector: theta_hat = theta* - M (phi_hat - phi*), where
// M = Theta^+ [sqrt(P(x)) grad l(x; theta*)]_x. Computing M once amortizes
// repeated perturbation solves.
inline Matrix perturbation_map(const LossModel& model, const Distribution& p,
                               const OptimalParameter& opt,
                               double pinv_tol = kDefaultPinvTol) {
  const Matrix theta_matrix = population_hessian(model, p, opt.theta_star);
  return pseudo_inverse(theta_matrix, pinv_tol) *
         detail::scaled_gradient_columns(model, p, opt);
}

inline Vector theta_perturbation(const LossModel& model, const Distribution& p,
                                 const OptimalParameter& opt, const InfoVector& phi_hat,
                                 double pinv_tol = kDefaultPinvTol) {
  require_same_alphabet(model.alphabet, phi_hat.alphabet);
  const Vector phi_star = p.mass().array().sqrt();
  return opt.theta_star -
         perturbation_map(model, p, opt, pinv_tol) * (phi_hat.coords - phi_star);
}

// Predicted excess risk of the perturbation phi - phi*: 0.5 d^T H d.
inline double epr_quadratic(const EprNormMatrix& m, const InfoVector& phi,
                            const InfoVector& phi_star) {
  require_same_alphabet(phi.alphabet, phi_star.alphabet);
  if (phi.coords.size() != m.h.rows())
    throw std::invalid_argument("information vector dimension does not match matrix");
  const Vector d = phi.coords - phi_star.coords;
  return 0.5 * d.dot(m.h * d);
}

}  // namespace epr
