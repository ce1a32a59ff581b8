#include <catch2/catch.hpp>

#include <cmath>
#include <complex>

#include "robcov/rmt.hpp"

using namespace robcov;
using complexd = std::complex<double>;

namespace {

// Herglotz root of y z s^2 + s (z + y - 1) + 1 = 0, the closed form of the
// self-consistency equation when H is a unit point mass.
complexd mp_stieltjes_oracle(double y, complexd z) {
  const complexd a = y * z;
  const complexd b = z + y - 1.0;
  const complexd disc = std::sqrt(b * b - 4.0 * a);
  const complexd r1 = (-b + disc) / (2.0 * a);
  const complexd r2 = (-b - disc) / (2.0 * a);
  return r1.imag() > 0.0 ? r1 : r2;
}

}  // namespace

TEST_CASE("spectral measure validation") {
  SpectralMeasure bad{{{1.0, 0.5}, {2.0, 0.6}}};
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  SpectralMeasure neg{{{-1.0, 1.0}}};
  CHECK_THROWS_AS(neg.check(), std::invalid_argument);

  Spectrum s;
  s.eigenvalues = {1.0, 1.0, 3.0, 3.0};
  const auto h = SpectralMeasure::from_spectrum(s);
  REQUIRE(h.atoms.size() == 4);
  CHECK(h.atoms[0].pi == Approx(0.25));
  CHECK_NOTHROW(h.check());
}

TEST_CASE("stieltjes solver matches the quadratic oracle") {
  const auto h = SpectralMeasure::dirac(1.0);
  const auto sol = stieltjes_solve(h, 0.2, {1.0, 0.01});
  const complexd oracle = mp_stieltjes_oracle(0.2, {1.0, 0.01});
  CHECK(std::abs(sol.s - oracle) < 1e-10);
  CHECK(sol.residual < 1e-10);
  CHECK(sol.s.imag() > 0.0);
}

TEST_CASE("stieltjes solver far from the support") {
  const complexd z{-10.0, 1.0};

  const auto h1 = SpectralMeasure::dirac(1.0);
  const auto s1 = stieltjes_solve(h1, 0.2, z);
  const complexd direct1 = 1.0 / (1.0 - z);
  CHECK(std::abs(s1.s - direct1) < 0.05 * std::abs(s1.s));

  const SpectralMeasure h2{{{1.0, 0.5}, {3.0, 0.5}}};
  const auto s2 = stieltjes_solve(h2, 0.2, z);
  const complexd direct2 = 0.5 / (1.0 - z) + 0.5 / (3.0 - z);
  CHECK(std::abs(s2.s - direct2) < 0.05 * std::abs(s2.s));
}

TEST_CASE("fixed point property and herglotz sweep") {
  const SpectralMeasure h{{{1.0, 0.5}, {3.0, 0.5}}};
  Rng rng(311);
  for (int k = 0; k < 50; ++k) {
    const complexd z{-2.0 + 8.0 * rng.uniform(), 0.005 + rng.uniform()};
    const auto sol = stieltjes_solve(h, 0.2, z);
    CHECK(sol.s.imag() > 0.0);
    // plugging s back into the map reproduces s
    const complexd core = 1.0 - 0.2 - 0.2 * z * sol.s;
    const complexd fs = 0.5 / (1.0 * core - z) + 0.5 / (3.0 * core - z);
    CHECK(std::abs(sol.s - fs) < 1e-10);
  }
}

TEST_CASE("stieltjes solver input validation") {
  const auto h = SpectralMeasure::dirac(1.0);
  CHECK_THROWS_AS(stieltjes_solve(h, 1.2, {1.0, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(stieltjes_solve(h, 0.2, {1.0, -0.1}), std::invalid_argument);

  StieltjesOptions strangled;
  strangled.max_iter = 1;
  try {
    stieltjes_solve(h, 0.2, {1.0, 1e-4}, strangled);
    FAIL("expected StieltjesError");
  } catch (const StieltjesError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("density recovery reproduces the closed-form law", "[heavy]") {
  const auto h = SpectralMeasure::dirac(1.0);
  const auto [lo, hi] = mp_support(0.2);
  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k)
    grid.push_back(0.5 + (1.8 - 0.5) * k / 30.0);  // interior of [lo, hi]
  const DensityCurve curve = density_from_stieltjes(h, 0.2, grid, 1e-4);
  REQUIRE(curve.flagged() == 0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(curve.rho[i] == Approx(mp_density(0.2, grid[i])).margin(2e-2));

  // off the support the smoothed density is eta-small
  const DensityCurve off = density_from_stieltjes(h, 0.2, {5.0}, 1e-4);
  CHECK(off.rho[0] < 1e-3);
  CHECK(hi < 5.0);
}

TEST_CASE("density mass and eta refinement", "[heavy]") {
  const SpectralMeasure h{{{1.0, 0.5}, {3.0, 0.5}}};
  std::vector<double> grid;
  for (int k = 0; k <= 800; ++k) grid.push_back(1e-3 + (8.0 - 1e-3) * k / 800.0);
  const DensityCurve curve = density_from_stieltjes(h, 0.2, grid, 1e-3);
  REQUIRE(curve.flagged() == 0);
  double mass = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    mass += 0.5 * (curve.rho[i] + curve.rho[i - 1]) * (grid[i] - grid[i - 1]);
  CHECK(mass == Approx(1.0).margin(0.01));

  for (double x : {0.8, 1.5, 3.0}) {
    const double rough = density_from_stieltjes(h, 0.2, {x}, 1e-3).rho[0];
    const double fine = density_from_stieltjes(h, 0.2, {x}, 1e-4).rho[0];
    CHECK(std::abs(rough - fine) < 5e-2);
  }
}

TEST_CASE("curve_cdf is a normalized monotone interpolant") {
  const auto h = SpectralMeasure::dirac(1.0);
  std::vector<double> grid;
  for (int k = 0; k <= 300; ++k) grid.push_back(0.05 + (3.0 - 0.05) * k / 300.0);
  const auto cdf = curve_cdf(density_from_stieltjes(h, 0.2, grid, 1e-3));
  CHECK(cdf(0.0) == 0.0);
  CHECK(cdf(4.0) == 1.0);
  double prev = 0.0;
  for (double x = 0.1; x < 3.0; x += 0.1) {
    const double c = cdf(x);
    CHECK(c >= prev - 1e-12);
    prev = c;
  }
}
