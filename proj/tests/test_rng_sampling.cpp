#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "robcov/sampling.hpp"

using namespace robcov;

namespace {

// two-sample Kolmogorov-Smirnov statistic
double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace

TEST_CASE("seed streams are deterministic and distinct") {
  const SeedSpec s{12345, 0};
  CHECK(s.stream() == SeedSpec{12345, 0}.stream());
  CHECK(s.for_trial(1).stream() != s.stream());
  CHECK(SeedSpec{12345, 7}.stream() != SeedSpec{12346, 7}.stream());

  Rng a(s), b(s);
  for (int k = 0; k < 100; ++k) REQUIRE(a.normal() == b.normal());
}

TEST_CASE("gamma sampler moments") {
  Rng rng(SeedSpec{99, 0});
  const int n = 40000;
  for (double shape : {0.5, 1.0, 3.7}) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.gamma(shape);
    CHECK(s / n == Approx(shape).margin(0.05 * std::max(1.0, shape)));
  }
  CHECK_THROWS_AS(rng.gamma(0.0), std::invalid_argument);
}

TEST_CASE("sample_gaussian determinism") {
  const SeedSpec s{42, 3};
  const DataMatrix a = sample_gaussian(4, 3, s);
  const DataMatrix b = sample_gaussian(4, 3, s);
  REQUIRE(max_abs(a - b) == 0.0);
  CHECK(max_abs(a - sample_gaussian(4, 3, SeedSpec{42, 4})) > 0.0);
  CHECK_THROWS_AS(sample_gaussian(0, 3, s), std::invalid_argument);
}

TEST_CASE("sample_gaussian moments at n=10000, p=1") {
  const DataMatrix x = sample_gaussian(10000, 1, SeedSpec{7, 0});
  const double mean = x.col(0).mean();
  const double var = (x.col(0).array() - mean).square().sum() / (x.rows() - 1);
  CHECK(mean > -0.05);
  CHECK(mean < 0.05);
  CHECK(var > 0.95);
  CHECK(var < 1.05);
}

TEST_CASE("squared row norms concentrate at p", "[heavy]") {
  const Index n = 2000, p = 400;
  const DataMatrix x = sample_gaussian(n, p, SeedSpec{11, 0});
  double worst = 0.0;
  for (Index i = 0; i < n; ++i)
    worst = std::max(worst,
                     std::abs(x.row(i).squaredNorm() / static_cast<double>(p) - 1.0));
  // union bound 2n exp(-eps^2 p / 4) = 0.01 gives eps = 0.36 at this size
  CHECK(worst < 0.36);
}

TEST_CASE("spike_shape layouts") {
  const ShapeMatrix t = spike_shape(20, {2.0});
  CHECK(t.matrix()(0, 0) == 2.0);
  CHECK(t.matrix()(1, 1) == 1.0);
  CHECK(t.matrix()(19, 19) == 1.0);
  CHECK(t.matrix().trace() == Approx(21.0));

  CHECK(max_abs(spike_shape(5, {}).matrix() - Matrix::Identity(5, 5)) == 0.0);

  const ShapeMatrix t2 = spike_shape(3, {4.0, 2.0});
  CHECK(t2.matrix()(0, 0) == 4.0);
  CHECK(t2.matrix()(1, 1) == 2.0);
  CHECK(t2.matrix()(2, 2) == 1.0);

  CHECK_THROWS_AS(spike_shape(2, {2.0, 2.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(spike_shape(3, {0.5}), std::invalid_argument);
}

TEST_CASE("shape matrix rejects non-pd input") {
  Matrix bad = Matrix::Identity(3, 3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(ShapeMatrix(bad), std::invalid_argument);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(ShapeMatrix(asym), std::invalid_argument);

  const ShapeMatrix ok = spike_shape(4, {9.0});
  CHECK(max_abs(ok.sqrt() * ok.sqrt() - ok.matrix()) < 1e-12);
  CHECK(ok.min_eigenvalue() == Approx(1.0));
}

TEST_CASE("fixed radius rows have exact norm") {
  const Index n = 50, p = 16;
  const double r = std::sqrt(static_cast<double>(p));
  const DataMatrix x = sample_with_shape(n, ShapeMatrix::identity(p),
                                         FixedRadius{r}, SeedSpec{5, 0});
  for (Index i = 0; i < n; ++i)
    CHECK(x.row(i).norm() == Approx(r).epsilon(1e-12));
}

TEST_CASE("gaussian radius with identity shape matches sample_gaussian moments") {
  const Index n = 4000, p = 8;
  const DataMatrix a = sample_with_shape(n, ShapeMatrix::identity(p),
                                         GaussianRadius{}, SeedSpec{21, 0});
  const DataMatrix b = sample_gaussian(n, p, SeedSpec{22, 0});
  for (const DataMatrix* x : {&a, &b}) {
    for (Index j = 0; j < p; ++j) CHECK(std::abs(x->col(j).mean()) < 0.1);
    const Matrix s = x->transpose() * *x / static_cast<double>(n);
    CHECK(max_abs(s - Matrix::Identity(p, p)) < 0.15);
  }
}

TEST_CASE("student t radius at huge dof is near gaussian") {
  const Index n = 4000, p = 8;
  const DataMatrix x = sample_with_shape(n, ShapeMatrix::identity(p),
                                         StudentTRadius{1e6}, SeedSpec{23, 0});
  const Matrix s = x.transpose() * x / static_cast<double>(n);
  CHECK(max_abs(s - Matrix::Identity(p, p)) < 0.15);
}

TEST_CASE("student t with one dof is heavy tailed") {
  const Index n = 200, p = 20;
  const DataMatrix x = sample_with_shape(n, ShapeMatrix::identity(p),
                                         StudentTRadius{1.0}, SeedSpec{31, 0});
  REQUIRE(x.allFinite());
  std::vector<double> norms;
  for (Index i = 0; i < n; ++i) norms.push_back(x.row(i).norm());
  std::sort(norms.begin(), norms.end());
  // a Cauchy-like radius makes the extremes dwarf the median
  CHECK(norms.back() / norms[norms.size() / 2] > 5.0);
  // determinism
  const DataMatrix x2 = sample_with_shape(n, ShapeMatrix::identity(p),
                                          StudentTRadius{1.0}, SeedSpec{31, 0});
  CHECK(max_abs(x - x2) == 0.0);
  CHECK_THROWS_AS(sample_with_shape(n, ShapeMatrix::identity(p),
                                    StudentTRadius{0.0}, SeedSpec{31, 0}),
                  std::invalid_argument);
}

TEST_CASE("sample covariance converges to the shape", "[heavy]") {
  const Index n = 2000, p = 200;
  const ShapeMatrix t = spike_shape(p, {4.0, 2.0});
  const DataMatrix x = sample_with_shape(n, t, GaussianRadius{}, SeedSpec{41, 0});
  const Matrix s = x.transpose() * x / static_cast<double>(n);
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  const double bound =
      3.0 * (std::sqrt(ratio) + ratio) * operator_norm_sym(t.matrix());
  CHECK(operator_norm_diff(s, t.matrix()) < bound);
}

TEST_CASE("project_sphere basics") {
  DataMatrix x(1, 2);
  x << 3.0, 4.0;
  const DataMatrix y = project_sphere(x);
  CHECK(y(0, 0) == Approx(0.6).margin(1e-15));
  CHECK(y(0, 1) == Approx(0.8).margin(1e-15));

  const DataMatrix g = sample_gaussian(40, 5, SeedSpec{51, 0});
  const DataMatrix once = project_sphere(g);
  const DataMatrix twice = project_sphere(once);
  CHECK(max_abs(twice - once) < 1e-15);

  DataMatrix z = g;
  z.row(3).setZero();
  CHECK_THROWS_AS(project_sphere(z), std::invalid_argument);
}

TEST_CASE("projected gram concentrates on the sample covariance", "[heavy]") {
  const Index n = 2000, p = 400;
  const DataMatrix x = sample_gaussian(n, p, SeedSpec{61, 0});
  const DataMatrix y = project_sphere(x);
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  const Matrix lhs = ratio * (y.transpose() * y);
  const Matrix rhs = x.transpose() * x / static_cast<double>(n);
  CHECK(operator_norm_diff(lhs, rhs) < 0.2);
}

TEST_CASE("directional projections are rotation invariant", "[heavy]") {
  const Index n = 10000, p = 8;
  const DataMatrix x = sample_gaussian(n, p, SeedSpec{71, 0});
  const DataMatrix u = project_sphere(x);
  Vector v1 = Vector::Unit(p, 0);
  Vector v2 = Vector::Ones(p).normalized();
  std::vector<double> s1, s2;
  for (Index i = 0; i < n; ++i) {
    s1.push_back(u.row(i).dot(v1));
    s2.push_back(u.row(i).dot(v2));
  }
  CHECK(two_sample_ks(s1, s2) < 0.05);
}
