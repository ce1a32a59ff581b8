#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "robcov/linalg.hpp"
#include "robcov/weight_fn.hpp"

namespace robcov {

// The span / existence condition of the scatter fixed points failed: the
// data do not determine a unique positive definite solution.
class ExistenceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double tol = 1e-10;   // relative operator-norm residual
  int max_iter = 1000;
  double damping = 1.0; // 1 = plain fixed-point step

  void check() const {
    if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (!(damping > 0.0) || damping > 1.0)
      throw std::invalid_argument("SolverConfig: damping must lie in (0, 1]");
  }
};

struct CovarianceEstimate {
  Matrix matrix;       // symmetric positive definite
  Vector weights;      // per-sample weight vector (empty for the sample covariance)
  int iterations = 0;
  double residual = 0.0;  // operator-norm defect of the defining equation
  bool converged = true;

  [[nodiscard]] double trace() const { return matrix.trace(); }
};

namespace detail {

inline void check_data(const DataMatrix& x) {
  if (x.rows() < 1 || x.cols() < 1)
    throw std::invalid_argument("data matrix must have n >= 1, p >= 1");
  if (!x.allFinite())
    throw std::invalid_argument("data matrix has non-finite entries");
}

inline void check_aspect(const DataMatrix& x) {
  if (x.rows() < x.cols())
    throw std::invalid_argument("n < p: the scatter fixed points require p/n < 1");
}

inline void check_no_zero_rows(const DataMatrix& x) {
  for (Index i = 0; i < x.rows(); ++i)
    if (x.row(i).norm() == 0.0)
      throw std::invalid_argument("data matrix has a zero row");
}

// Rows span R^p iff the Gram matrix X^T X is positive definite.
inline void check_span_gram(const Matrix& gram) {
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw ExistenceError("data rows do not span R^p");
}

inline void check_span(const DataMatrix& x) {
  check_span_gram(weighted_gram(x, Vector::Ones(x.rows())));
}

inline Eigen::LLT<Matrix> factor_spd(const Matrix& m, const char* who) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw ExistenceError(std::string(who) + ": iterate lost positive definiteness");
  return llt;
}

// Cheap residual estimate used inside the solver loops.
inline double opnorm50(const Matrix& a) {
  return operator_norm_sym(a, PowerIterOptions{50, 1e-14, 1});
}

}  // namespace detail

// S_n = (1/n) sum x_i x_i^T.
inline CovarianceEstimate sample_covariance(const DataMatrix& x) {
  detail::check_data(x);
  const double n = static_cast<double>(x.rows());
  CovarianceEstimate est;
  est.matrix = weighted_gram(x, Vector::Ones(x.rows())) / n;
  est.iterations = 0;
  est.residual = 0.0;
  est.converged = true;
  return est;
}

namespace detail {

inline Matrix checked_init(const Matrix& init, Index p, const char* who) {
  if (init.rows() != p || init.cols() != p)
    throw std::invalid_argument(std::string(who) + ": init has wrong shape");
  if (!is_symmetric(init))
    throw std::invalid_argument(std::string(who) + ": init must be symmetric");
  Eigen::LLT<Matrix> llt(init);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(who) + ": init must be positive definite");
  return init;
}

}  // namespace detail

// Weight-vector representation of Tyler's estimator:
//   w_i = (x_i^T Sigma^{-1} x_i)^{-1}, normalized to sum to one.
// sum_i w_i x_i x_i^T is then proportional to Sigma at the fixed point.
inline Vector tyler_weights(const DataMatrix& x, const Matrix& sigma) {
  detail::check_data(x);
  detail::check_no_zero_rows(x);
  if (!is_symmetric(sigma))
    throw std::invalid_argument("tyler_weights: sigma must be symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("tyler_weights: sigma must be positive definite");
  Vector q = quad_forms(llt, x);
  Vector w = q.cwiseInverse();
  return w / w.sum();
}

// Tyler's scatter estimator: the trace-one solution of
//   Sigma = (p/n) sum_i x_i x_i^T / (x_i^T Sigma^{-1} x_i).
// Fixed-point iteration with trace renormalization each step, from I/p
// unless a positive definite starting point is supplied (the limit is the
// same either way; uniqueness makes the start a performance knob only).
inline CovarianceEstimate tyler_estimate(const DataMatrix& x,
                                         const SolverConfig& cfg = {},
                                         const std::optional<Matrix>& init = {}) {
  cfg.check();
  detail::check_data(x);
  detail::check_aspect(x);
  detail::check_no_zero_rows(x);
  detail::check_span(x);

  const Index n = x.rows();
  const Index p = x.cols();
  const double ratio = static_cast<double>(p) / static_cast<double>(n);

  const auto apply_map = [&](const Matrix& sigma) {
    const auto llt = detail::factor_spd(sigma, "tyler_estimate");
    const Vector q = quad_forms(llt, x);
    return weighted_gram(x, (ratio / q.array()).matrix());
  };

  Matrix sigma = init ? detail::checked_init(*init, p, "tyler_estimate")
                      : Matrix(Matrix::Identity(p, p));
  sigma /= sigma.trace();
  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    Matrix mapped = apply_map(sigma);
    const double resid = detail::opnorm50(mapped - sigma);
    const double scale = detail::opnorm50(sigma);
    Matrix next = cfg.damping < 1.0
                      ? Matrix((1.0 - cfg.damping) * sigma + cfg.damping * mapped)
                      : std::move(mapped);
    next /= next.trace();
    sigma = std::move(next);
    if (resid <= cfg.tol * scale) {
      // confirm with the accurate norm on the candidate itself
      Matrix confirmed = apply_map(sigma);
      const double resid_acc = operator_norm_diff(confirmed, sigma);
      const double scale_acc = operator_norm_sym(sigma);
      if (resid_acc <= cfg.tol * scale_acc) {
        CovarianceEstimate est;
        est.matrix = std::move(sigma);
        est.iterations = it;
        est.residual = resid_acc;
        est.converged = true;
        est.weights = tyler_weights(x, est.matrix);
        return est;
      }
    }
  }

  Matrix mapped = apply_map(sigma);
  CovarianceEstimate est;
  est.residual = operator_norm_diff(mapped, sigma);
  est.matrix = std::move(sigma);
  est.iterations = cfg.max_iter;
  est.converged = false;
  est.weights = tyler_weights(x, est.matrix);
  return est;
}

// Weight-space objective whose minimizer over the simplex gives Tyler's
// estimator:  -sum log w_i + (n/p) log det(sum w_i x_i x_i^T).
// Invariant under w -> c w.
inline double tyler_objective(const Vector& w, const DataMatrix& x) {
  detail::check_data(x);
  if (w.size() != x.rows())
    throw std::invalid_argument("tyler_objective: weight length != row count");
  if (!(w.array() > 0.0).all())
    throw std::invalid_argument("tyler_objective: weights must be positive");
  Matrix m = weighted_gram(x, w);
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(
        "tyler_objective: weighted gram is singular (objective is +infinity)");
  const double logdet =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double np = static_cast<double>(x.rows()) / static_cast<double>(x.cols());
  return -w.array().log().sum() + np * logdet;
}

// Maronna's scatter estimator without the 1/n factor:
//   Sigma = sum_i u(x_i^T Sigma^{-1} x_i) x_i x_i^T.
// Fixed-point iteration from n u(psi^{-1}(p/n)) S_n.  The returned weights
// are w_i = x_i^T Sigma^{-1} x_i at the solution.
inline CovarianceEstimate maronna_estimate(const DataMatrix& x, const WeightFn& fn,
                                           const SolverConfig& cfg = {},
                                           const std::optional<Matrix>& init = {}) {
  cfg.check();
  detail::check_data(x);
  detail::check_aspect(x);
  detail::check_no_zero_rows(x);

  const Index n = x.rows();
  const Index p = x.cols();
  const double y = static_cast<double>(p) / static_cast<double>(n);

  const auto rep = validate_u(fn, GridSpec::for_ratio(y));
  if (!rep.ok())
    throw std::invalid_argument(
        "maronna_estimate: weight function failed validation (" + fn.name +
        "): " + (!rep.positive ? "u not positive"
                : !rep.psi_increasing ? "psi not strictly increasing"
                : !rep.psi_tail_exceeds_y ? "psi tail does not exceed p/n"
                                          : "x u'(x) < u(x) violated"));

  const auto apply_map = [&](const Matrix& sigma, Vector* qf_out) {
    const auto llt = detail::factor_spd(sigma, "maronna_estimate");
    Vector q = quad_forms(llt, x);
    Vector w(q.size());
    for (Index i = 0; i < q.size(); ++i) w(i) = fn.u(q(i));
    if (qf_out) *qf_out = std::move(q);
    return weighted_gram(x, w);
  };

  Matrix gram = weighted_gram(x, Vector::Ones(n));
  detail::check_span_gram(gram);
  // default start: n u(psi^{-1}(p/n)) S_n, the scale the weight limit predicts
  Matrix sigma = init ? detail::checked_init(*init, p, "maronna_estimate")
                      : Matrix(fn.u(psi_inverse(fn, y)) * std::move(gram));

  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    Matrix mapped = apply_map(sigma, nullptr);
    const double resid = detail::opnorm50(mapped - sigma);
    const double scale = detail::opnorm50(sigma);
    Matrix next = cfg.damping < 1.0
                      ? Matrix((1.0 - cfg.damping) * sigma + cfg.damping * mapped)
                      : std::move(mapped);
    sigma = std::move(next);
    if (resid <= cfg.tol * scale) {
      Vector qf;
      Matrix confirmed = apply_map(sigma, &qf);
      const double resid_acc = operator_norm_diff(confirmed, sigma);
      const double scale_acc = operator_norm_sym(sigma);
      if (resid_acc <= cfg.tol * scale_acc) {
        CovarianceEstimate est;
        est.matrix = std::move(sigma);
        est.weights = std::move(qf);
        est.iterations = it;
        est.residual = resid_acc;
        est.converged = true;
        return est;
      }
    }
  }

  Vector qf;
  Matrix mapped = apply_map(sigma, &qf);
  CovarianceEstimate est;
  est.residual = operator_norm_diff(mapped, sigma);
  est.matrix = std::move(sigma);
  est.weights = std::move(qf);
  est.iterations = cfg.max_iter;
  est.converged = false;
  return est;
}

// Sup-norm defect of the weight fixed point
//   w_j = x_j^T ( sum_i u(w_i) x_i x_i^T )^{-1} x_j
// evaluated at w_j = x_j^T Sigma^{-1} x_j.
inline double maronna_weight_residual(const DataMatrix& x, const Matrix& sigma,
                                      const WeightFn& fn) {
  detail::check_data(x);
  if (!is_symmetric(sigma))
    throw std::invalid_argument("maronna_weight_residual: sigma must be symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "maronna_weight_residual: sigma must be positive definite");
  const Vector w = quad_forms(llt, x);
  Vector uw(w.size());
  for (Index i = 0; i < w.size(); ++i) uw(i) = fn.u(w(i));
  Matrix m = weighted_gram(x, uw);
  Eigen::LLT<Matrix> llt_m(m);
  if (llt_m.info() != Eigen::Success)
    throw ExistenceError("maronna_weight_residual: weighted gram not positive definite");
  const Vector v = quad_forms(llt_m, x);
  return (w - v).cwiseAbs().maxCoeff();
}

enum class ScalingConvention { paper, derived };

// Factor c such that c * Sigma_maronna is comparable to S_n.
//   paper:   1 / (n psi^{-1}(1/y))
//   derived: 1 / (n u(psi^{-1}(y))), equivalently psi^{-1}(y) / (n y),
// the factor under which the weight limit psi^{-1}(y) maps the fixed point
// onto S_n.  Which convention is consistent is settled empirically by the
// calibration experiment; both remain available.
inline double maronna_scaling(const WeightFn& fn, double y, Index n,
                              ScalingConvention convention) {
  if (!(y > 0.0 && y < 1.0))
    throw std::invalid_argument("maronna_scaling: y must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("maronna_scaling: n must be >= 1");
  const double dn = static_cast<double>(n);
  if (convention == ScalingConvention::paper)
    return 1.0 / (dn * psi_inverse(fn, 1.0 / y));
  return 1.0 / (dn * fn.u(psi_inverse(fn, y)));
}

}  // namespace robcov
