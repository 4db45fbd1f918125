#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fairglm/errors.hpp"
#include "fairglm/family.hpp"

namespace fairglm {

struct LineSearchConfig {
  double shrink = 0.5;        // step multiplier per backtrack
  double c1 = 1e-4;           // Armijo sufficient-decrease constant
  int max_backtracks = 50;
};

struct FitConfig {
  double lambda = 0.0;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;  // max-norm of the full gradient
  LineSearchConfig line_search{};
  double hessian_ridge = 1e-10;      // initial jitter when LLT fails
  double ridge_max = 1e-2;           // escalation cap (x10 per retry)
};

struct FittedModel {
  Matrix beta;  // p x m (m = 1 for scalar families)
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = std::numeric_limits<double>::quiet_NaN();
  double train_nll = std::numeric_limits<double>::quiet_NaN();
  double train_penalty_value = 0.0;  // beta' D beta summed over classes
  std::optional<double> sigma2_hat;  // gaussian only: mean squared residual
  std::vector<double> objective_history;  // accepted iterates, first = start
  std::vector<std::string> warnings;
};

namespace detail {

inline bool penalty_active(const Matrix& D, double lambda) {
  // exact zero D must reproduce the unpenalized path bit-for-bit
  return lambda != 0.0 && D.size() > 0 && D.cwiseAbs().maxCoeff() > 0.0;
}

inline double quad_form(const Matrix& D, const Matrix& beta) {
  double q = 0.0;
  for (Eigen::Index c = 0; c < beta.cols(); ++c)
    q += beta.col(c).dot(D * beta.col(c));
  return q;
}

}  // namespace detail

// Penalized objective F(beta) = -(1/n) sum_i loglik_i + lambda * beta' D beta.
// Non-finite intermediates surface as +inf so a line search can back off.
inline double objective(const Matrix& beta, const Matrix& X, const Vector& y,
                        const Family& fam, const Matrix& D, double lambda) {
  const Matrix eta = X * beta;
  const double nll = -log_likelihood(fam, y, eta).mean();
  double val = nll;
  if (detail::penalty_active(D, lambda)) val += lambda * detail::quad_form(D, beta);
  return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
}

// Gradient -(1/n) X'(y - mu) + 2 lambda D beta, one column per class.
inline Matrix gradient(const Matrix& beta, const Matrix& X, const Vector& y,
                       const Family& fam, const Matrix& D, double lambda) {
  const Matrix eta = X * beta;
  const Matrix resid = score_residual(fam, y, eta);
  Matrix g = -(X.transpose() * resid) / static_cast<double>(X.rows());
  if (detail::penalty_active(D, lambda)) g.noalias() += 2.0 * lambda * (D * beta);
  return g;
}

// Hessian (1/n) X' W X + 2 lambda D with W = diag(b''(eta)).  For the
// multinomial the pm x pm matrix is built from the per-sample m x m blocks
// mu_c (delta_cd - mu_d); the penalty enters each diagonal class block.
inline Matrix hessian(const Matrix& beta, const Matrix& X, const Vector& y,
                      const Family& fam, const Matrix& D, double lambda) {
  (void)y;
  const Eigen::Index p = X.cols();
  const auto n = static_cast<double>(X.rows());
  const Matrix eta = X * beta;
  const bool pen = detail::penalty_active(D, lambda);

  if (!fam.is_multinomial()) {
    const Vector w = variance(fam, eta);
    Matrix H = X.transpose() * w.asDiagonal() * X / n;
    if (pen) H.noalias() += 2.0 * lambda * D;
    return H;
  }

  const int m = fam.m;
  const Matrix mu = mean(fam, eta);
  Matrix H = Matrix::Zero(p * m, p * m);
  Vector w(X.rows());
  for (int c = 0; c < m; ++c) {
    for (int d = c; d < m; ++d) {
      if (c == d)
        w = mu.col(c).array() * (1.0 - mu.col(c).array());
      else
        w = -(mu.col(c).array() * mu.col(d).array());
      Matrix block = X.transpose() * w.asDiagonal() * X / n;
      if (pen && c == d) block.noalias() += 2.0 * lambda * D;
      H.block(c * p, d * p, p, p) = block;
      if (c != d) H.block(d * p, c * p, p, p) = block.transpose();
    }
  }
  return H;
}

// Damped Newton-Raphson from beta = 0 with Armijo backtracking.  An exactly
// zero (or absent) D reproduces the unpenalized fit bit-for-bit.  Pass an
// empty D for a plain GLM.
inline FittedModel fit(const Matrix& X, const Vector& y, const Family& fam,
                       const Matrix& D, const FitConfig& cfg = {}) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const int m = fam.predictor_cols();
  if (y.size() != n) throw config_error("fit: X and y row counts differ");
  if (D.size() > 0 && (D.rows() != p || D.cols() != p))
    throw config_error("fit: penalty matrix must be p x p");
  if (cfg.lambda < 0) throw config_error("fit: lambda must be >= 0");
  check_support(fam, y);

  FittedModel model;
  model.beta = Matrix::Zero(p, m);
  if (n < p)
    model.warnings.push_back("n < p: fit may be ill-conditioned");

  double obj = objective(model.beta, X, y, fam, D, cfg.lambda);
  model.objective_history.push_back(obj);

  const Eigen::Index dim = p * m;
  Matrix beta_trial(p, m);
  double grad_norm = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const Matrix g = gradient(model.beta, X, y, fam, D, cfg.lambda);
    grad_norm = g.cwiseAbs().maxCoeff();
    if (grad_norm <= cfg.gradient_tolerance) {
      model.converged = true;
      break;
    }

    Matrix H = hessian(model.beta, X, y, fam, D, cfg.lambda);
    Eigen::Map<const Vector> gflat(g.data(), dim);
    Vector step(dim);
    {
      Eigen::LLT<Matrix> llt(H);
      double ridge = 0.0;
      while (llt.info() != Eigen::Success) {
        ridge = ridge == 0.0 ? cfg.hessian_ridge : ridge * 10.0;
        if (ridge > cfg.ridge_max)
          throw data_error("fit: Hessian not factorizable even with ridge " +
                           std::to_string(cfg.ridge_max));
        Matrix Hr = H + ridge * Matrix::Identity(dim, dim);
        llt.compute(Hr);
      }
      step = llt.solve(-gflat);
    }

    const double slope = gflat.dot(step);  // expected < 0 for a descent step
    double t = 1.0;
    double trial = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt <= cfg.line_search.max_backtracks; ++bt) {
      beta_trial = model.beta + t * Eigen::Map<const Matrix>(step.data(), p, m);
      trial = objective(beta_trial, X, y, fam, D, cfg.lambda);
      if (std::isfinite(trial) && trial <= obj + cfg.line_search.c1 * t * slope) {
        accepted = true;
        break;
      }
      t *= cfg.line_search.shrink;
    }
    if (!accepted) {
      model.warnings.push_back("line search found no decrease; stopping early");
      break;
    }
    model.beta = beta_trial;
    obj = trial;
    model.objective_history.push_back(obj);
    model.iterations = iter + 1;
  }

  if (!model.converged) {
    grad_norm = gradient(model.beta, X, y, fam, D, cfg.lambda)
                    .cwiseAbs()
                    .maxCoeff();
  }
  model.final_gradient_norm = grad_norm;

  const Matrix eta = X * model.beta;
  model.train_nll = -log_likelihood(fam, y, eta).mean();
  model.train_penalty_value = D.size() > 0 ? detail::quad_form(D, model.beta) : 0.0;
  if (fam.kind == FamilyKind::gaussian)
    model.sigma2_hat = (y - eta.col(0)).squaredNorm() / static_cast<double>(n);
  return model;
}

}  // namespace fairglm
