#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "robcov/linalg.hpp"
#include "robcov/rng.hpp"

namespace robcov {

// Positive definite p x p shape matrix.  The symmetric square root is
// computed once at construction (eigendecomposition) and cached; samplers
// multiply rows by it repeatedly.
class ShapeMatrix {
 public:
  explicit ShapeMatrix(Matrix t) {
    if (t.rows() != t.cols() || t.rows() < 1)
      throw std::invalid_argument("ShapeMatrix: must be square, p >= 1");
    if (!is_symmetric(t))
      throw std::invalid_argument("ShapeMatrix: not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("ShapeMatrix: eigendecomposition failed");
    min_eig_ = es.eigenvalues().minCoeff();
    if (!(min_eig_ > 0.0))
      throw std::invalid_argument("ShapeMatrix: not positive definite");
    sqrt_ = es.eigenvectors() *
            es.eigenvalues().cwiseSqrt().asDiagonal() *
            es.eigenvectors().transpose();
    mat_ = std::move(t);
  }

  static ShapeMatrix identity(Index p) { return ShapeMatrix(Matrix::Identity(p, p)); }

  [[nodiscard]] const Matrix& matrix() const { return mat_; }
  [[nodiscard]] const Matrix& sqrt() const { return sqrt_; }
  [[nodiscard]] double min_eigenvalue() const { return min_eig_; }
  [[nodiscard]] Index dim() const { return mat_.rows(); }
  [[nodiscard]] bool is_identity() const {
    return max_abs(mat_ - Matrix::Identity(mat_.rows(), mat_.cols())) == 0.0;
  }

 private:
  Matrix mat_;
  Matrix sqrt_;
  double min_eig_ = 0.0;
};

// diag(l_1, ..., l_r, 1, ..., 1) with all spike amplitudes l_k >= 1.
inline ShapeMatrix spike_shape(Index p, const std::vector<double>& spikes) {
  if (static_cast<Index>(spikes.size()) > p)
    throw std::invalid_argument("spike_shape: more spikes than dimensions");
  Vector d = Vector::Ones(p);
  for (std::size_t k = 0; k < spikes.size(); ++k) {
    if (!(spikes[k] >= 1.0))
      throw std::invalid_argument("spike_shape: spike amplitudes must be >= 1");
    d(static_cast<Index>(k)) = spikes[k];
  }
  return ShapeMatrix(Matrix(d.asDiagonal()));
}

// Radial law of an elliptical sample r * T^{1/2} u, u uniform on the sphere.
struct GaussianRadius {};                 // r = ||z||, z ~ N(0, I_p): exact chi_p
struct StudentTRadius { double nu; };     // r = ||z|| / sqrt(g/nu), g ~ chi^2_nu
struct FixedRadius { double r; };
using RadialSpec = std::variant<GaussianRadius, StudentTRadius, FixedRadius>;

// n i.i.d. rows from N(0, I_p).  Row-major draw order, so the stream is a
// pure function of (seed, n, p).
inline DataMatrix sample_gaussian(Index n, Index p, SeedSpec seed) {
  if (n < 1 || p < 1)
    throw std::invalid_argument("sample_gaussian: need n >= 1, p >= 1");
  Rng rng(seed);
  DataMatrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

// Elliptical sampler: each row is r * T^{1/2} u with u = z/||z|| for a fresh
// standard normal vector z, and r per the radial spec.  Norm and direction
// of a Gaussian vector are independent, so GaussianRadius (r = ||z||, the
// exact chi_p law) reproduces N(0,T) and StudentTRadius(nu) reproduces the
// multivariate t_nu(0,T) via x = z / sqrt(g/nu).
inline DataMatrix sample_with_shape(Index n, const ShapeMatrix& t,
                                    const RadialSpec& radial, SeedSpec seed) {
  if (n < 1) throw std::invalid_argument("sample_with_shape: need n >= 1");
  const Index p = t.dim();
  if (const auto* st = std::get_if<StudentTRadius>(&radial); st && !(st->nu > 0.0))
    throw std::invalid_argument("sample_with_shape: t dof must be positive");
  if (const auto* fr = std::get_if<FixedRadius>(&radial); fr && !(fr->r > 0.0))
    throw std::invalid_argument("sample_with_shape: fixed radius must be positive");

  Rng rng(seed);
  DataMatrix x(n, p);
  Vector z(p);
  for (Index i = 0; i < n; ++i) {
    double zn = 0.0;
    do {
      for (Index j = 0; j < p; ++j) z(j) = rng.normal();
      zn = z.norm();
    } while (zn == 0.0);
    // scale = r / ||z||, so the row is r * (z/||z||)
    const double scale = std::visit(
        [&](const auto& spec) -> double {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, GaussianRadius>) {
            return 1.0;
          } else if constexpr (std::is_same_v<T, StudentTRadius>) {
            return 1.0 / std::sqrt(rng.chi_square(spec.nu) / spec.nu);
          } else {
            return spec.r / zn;
          }
        },
        radial);
    x.row(i) = scale * z.transpose();
  }
  return x * t.sqrt();  // T^{1/2} symmetric, so right-multiplying rows works
}

// Rows rescaled to unit norm; direction preserved.
inline DataMatrix project_sphere(const DataMatrix& x) {
  DataMatrix y = x;
  for (Index i = 0; i < y.rows(); ++i) {
    const double nrm = y.row(i).norm();
    if (nrm == 0.0)
      throw std::invalid_argument("project_sphere: zero row");
    y.row(i) /= nrm;
  }
  return y;
}

}  // namespace robcov
