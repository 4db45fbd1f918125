#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "fairglm/errors.hpp"

namespace fairglm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

enum class OutcomeType { binary, continuous, count, multiclass };

enum class FamilyKind { gaussian, bernoulli, poisson, multinomial };

// ---- overflow-guarded scalar primitives ----

inline double clamped_exp(double x) {
  return std::exp(std::clamp(x, -700.0, 700.0));
}

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + clamped_exp(-eta));
  const double e = clamped_exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
inline double log1pexp(double eta) {
  if (eta > 0.0) return eta + std::log1p(clamped_exp(-eta));
  return std::log1p(clamped_exp(eta));
}

// Exponential family with canonical link and a(phi) fixed to 1 while
// fitting.  The multinomial uses the baseline-category logit: eta has m
// columns, one per non-reference class, and the reference class carries the
// complement probability.
struct Family {
  FamilyKind kind = FamilyKind::gaussian;
  int m = 1;  // non-reference class count; 1 for the scalar families

  static Family gaussian() { return {FamilyKind::gaussian, 1}; }
  static Family bernoulli() { return {FamilyKind::bernoulli, 1}; }
  static Family poisson() { return {FamilyKind::poisson, 1}; }
  static Family multinomial(int m) {
    if (m < 1) throw config_error("multinomial: class count m must be >= 1");
    return {FamilyKind::multinomial, m};
  }

  bool is_multinomial() const { return kind == FamilyKind::multinomial; }
  int predictor_cols() const { return is_multinomial() ? m : 1; }

  std::string name() const {
    switch (kind) {
      case FamilyKind::gaussian: return "gaussian";
      case FamilyKind::bernoulli: return "bernoulli";
      case FamilyKind::poisson: return "poisson";
      case FamilyKind::multinomial: return "multinomial";
    }
    return "?";
  }
};

inline Family family_for_outcome(OutcomeType type, int n_classes = 0) {
  switch (type) {
    case OutcomeType::binary: return Family::bernoulli();
    case OutcomeType::continuous: return Family::gaussian();
    case OutcomeType::count: return Family::poisson();
    case OutcomeType::multiclass: return Family::multinomial(n_classes - 1);
  }
  throw config_error("unknown outcome type");
}

namespace detail {

// stable softmax row for the baseline-category logit; the implicit reference
// class has eta = 0
inline void softmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& eta,
                        Eigen::Ref<Eigen::RowVectorXd> mu) {
  const double shift = std::max(0.0, eta.maxCoeff());
  double denom = clamped_exp(-shift);  // reference class term
  for (Eigen::Index c = 0; c < eta.size(); ++c) {
    mu(c) = clamped_exp(eta(c) - shift);
    denom += mu(c);
  }
  mu /= denom;
}

// log(1 + sum_c exp(eta_c)), shifted for stability
inline double log_sum_exp1(const Eigen::Ref<const Eigen::RowVectorXd>& eta) {
  const double shift = std::max(0.0, eta.maxCoeff());
  double s = clamped_exp(-shift);
  for (Eigen::Index c = 0; c < eta.size(); ++c) s += clamped_exp(eta(c) - shift);
  return shift + std::log(s);
}

}  // namespace detail

// mu = b'(eta); n x m (m = 1 for scalar families).  Saturates instead of
// overflowing for extreme eta.
inline Matrix mean(const Family& fam, const Matrix& eta) {
  Matrix mu(eta.rows(), eta.cols());
  switch (fam.kind) {
    case FamilyKind::gaussian:
      mu = eta;
      break;
    case FamilyKind::bernoulli:
      mu = eta.unaryExpr([](double e) { return logistic(e); });
      break;
    case FamilyKind::poisson:
      mu = eta.unaryExpr([](double e) { return clamped_exp(e); });
      break;
    case FamilyKind::multinomial:
      for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        Eigen::RowVectorXd row(eta.cols());
        detail::softmax_row(eta.row(i), row);
        mu.row(i) = row;
      }
      break;
  }
  return mu;
}

// b''(eta) per sample for the scalar families (the IRLS weight)
inline Vector variance(const Family& fam, const Matrix& eta) {
  Vector v = Vector::Zero(eta.rows());
  switch (fam.kind) {
    case FamilyKind::gaussian:
      v.setOnes();
      break;
    case FamilyKind::bernoulli:
      for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        const double p = logistic(eta(i, 0));
        v(i) = p * (1.0 - p);
      }
      break;
    case FamilyKind::poisson:
      for (Eigen::Index i = 0; i < eta.rows(); ++i) v(i) = clamped_exp(eta(i, 0));
      break;
    case FamilyKind::multinomial:
      throw config_error("variance: use variance_block for the multinomial");
  }
  return v;
}

// d mu / d eta for one sample: m x m block mu_c (delta_cd - mu_d); 1x1 b''
// for the scalar families
inline Matrix variance_block(const Family& fam,
                             const Eigen::Ref<const Eigen::RowVectorXd>& eta_row) {
  if (!fam.is_multinomial()) {
    Matrix eta(1, 1);
    eta(0, 0) = eta_row(0);
    Matrix b(1, 1);
    b(0, 0) = variance(fam, eta)(0);
    return b;
  }
  Eigen::RowVectorXd mu(eta_row.size());
  detail::softmax_row(eta_row, mu);
  Matrix block = -(mu.transpose() * mu);
  block.diagonal() += mu.transpose();
  return block;
}

// Rejects outcomes outside the family support, naming the offending row.
inline void check_support(const Family& fam, const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    const bool integral = std::isfinite(v) && v == std::floor(v);
    bool ok = true;
    switch (fam.kind) {
      case FamilyKind::gaussian: ok = std::isfinite(v); break;
      case FamilyKind::bernoulli: ok = v == 0.0 || v == 1.0; break;
      case FamilyKind::poisson: ok = integral && v >= 0.0; break;
      case FamilyKind::multinomial: ok = integral && v >= 0.0 && v <= fam.m; break;
    }
    if (!ok) {
      throw data_error("outcome value " + std::to_string(v) + " at row " +
                       std::to_string(i) + " is outside the " + fam.name() +
                       " support");
    }
  }
}

// Per-sample log likelihood with a(phi) = 1 except that the gaussian accepts
// a dispersion for reporting (fitting always passes sigma2 = 1).
inline Vector log_likelihood(const Family& fam, const Vector& y,
                             const Matrix& eta, double sigma2 = 1.0) {
  Vector ll(y.size());
  constexpr double log2pi = 1.8378770664093454836;  // log(2*pi)
  switch (fam.kind) {
    case FamilyKind::gaussian: {
      const double s2 = std::max(sigma2, 1e-12);
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double r = y(i) - eta(i, 0);
        ll(i) = -0.5 * r * r / s2 - 0.5 * (log2pi + std::log(s2));
      }
      break;
    }
    case FamilyKind::bernoulli:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        ll(i) = y(i) * eta(i, 0) - log1pexp(eta(i, 0));
      break;
    case FamilyKind::poisson:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        ll(i) = y(i) * eta(i, 0) - clamped_exp(eta(i, 0)) - std::lgamma(y(i) + 1.0);
      break;
    case FamilyKind::multinomial:
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const int cls = static_cast<int>(y(i));
        const double lin = cls >= 1 ? eta(i, cls - 1) : 0.0;
        ll(i) = lin - detail::log_sum_exp1(eta.row(i));
      }
      break;
  }
  return ll;
}

// d log-lik / d eta = y - mu with a(phi) = 1; n x m, one-hot y for the
// multinomial (all-zero row for the reference class)
inline Matrix score_residual(const Family& fam, const Vector& y,
                             const Matrix& eta) {
  Matrix mu = mean(fam, eta);
  if (!fam.is_multinomial()) {
    Matrix r(y.size(), 1);
    r.col(0) = y - mu.col(0);
    return r;
  }
  Matrix r = -mu;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int cls = static_cast<int>(y(i));
    if (cls >= 1) r(i, cls - 1) += 1.0;
  }
  return r;
}

}  // namespace fairglm
