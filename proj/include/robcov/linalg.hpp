#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "robcov/rng.hpp"

namespace robcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// n x p sample matrix; each row is one observation in R^p.
using DataMatrix = Eigen::MatrixXd;

inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& a, double rtol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(max_abs(a), 1.0e-300);
  return max_abs(a - a.transpose()) <= rtol * scale;
}

// sum_i w_i x_i x_i^T over the rows of X, assembled as (W^{1/2}X)^T(W^{1/2}X)
// so the result is symmetric by construction.  Requires w_i >= 0.
inline Matrix weighted_gram(const DataMatrix& x, const Vector& w) {
  if (w.size() != x.rows())
    throw std::invalid_argument("weighted_gram: weight length != row count");
  if ((w.array() < 0.0).any())
    throw std::invalid_argument("weighted_gram: negative weight");
  const Index p = x.cols();
  Matrix xw = w.cwiseSqrt().asDiagonal() * x;
  Matrix s = Matrix::Zero(p, p);
  s.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  return Matrix(s.selfadjointView<Eigen::Lower>());
}

// q_i = x_i^T M^{-1} x_i for every row of X, from one Cholesky factor of M.
// Never forms M^{-1} explicitly.
inline Vector quad_forms(const Eigen::LLT<Matrix>& llt, const DataMatrix& x) {
  Matrix y = llt.matrixL().solve(x.transpose());  // p x n
  return y.colwise().squaredNorm().transpose();
}

struct PowerIterOptions {
  int max_steps = 5000;
  double rtol = 1e-14;   // relative stall threshold on the norm estimate
  int restarts = 2;      // extra runs guard against a start vector that is
                         // orthogonal to the dominant eigenspace
};

// Largest |eigenvalue| of a symmetric matrix by power iteration applied to
// A^2.  Squaring removes the sign ambiguity when the extreme eigenvalues
// form a near +/- pair, where plain iteration on A stalls.
inline double operator_norm_sym(const Matrix& a, PowerIterOptions opt = {}) {
  const Index p = a.rows();
  if (p == 0) return 0.0;
  if (p == 1) return std::abs(a(0, 0));

  std::mt19937_64 eng(splitmix64(0x6f706e6f726dULL ^ static_cast<std::uint64_t>(p)));
  const auto unit_start = [&]() {
    Vector v(p);
    for (Index i = 0; i < p; ++i)
      v(i) = static_cast<double>(eng() >> 11) * 0x1.0p-53 - 0.5;
    const double nv = v.norm();
    if (nv == 0.0) return Vector(Vector::Unit(p, 0));
    return Vector(v / nv);
  };

  double best = 0.0;
  for (int run = 0; run < std::max(1, opt.restarts); ++run) {
    Vector v = unit_start();
    double est = 0.0;
    double prev = -1.0;
    for (int step = 0; step < opt.max_steps; ++step) {
      Vector w = a.selfadjointView<Eigen::Lower>() * v;
      const double nw = w.norm();
      if (nw == 0.0) {
        est = 0.0;
        break;
      }
      est = nw;  // ||A v|| with ||v|| = 1
      Vector z = a.selfadjointView<Eigen::Lower>() * w;
      const double nz = z.norm();
      if (nz == 0.0) break;
      v = z / nz;
      if (std::abs(est - prev) <= opt.rtol * std::max(est, 1e-300)) break;
      prev = est;
    }
    best = std::max(best, est);
  }
  return best;
}

// Spectral norm of A - B for symmetric same-shape inputs.
inline double operator_norm_diff(const Matrix& a, const Matrix& b,
                                 PowerIterOptions opt = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("operator_norm_diff: shape mismatch");
  if (!is_symmetric(a) || !is_symmetric(b))
    throw std::invalid_argument("operator_norm_diff: inputs must be symmetric");
  return operator_norm_sym(a - b, opt);
}

}  // namespace robcov
