#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "robcov/spectra.hpp"

namespace robcov {

// Discrete limiting spectrum H of the shape matrices: atoms (t_k, pi_k)
// with positive locations and weights summing to one.
struct SpectralMeasure {
  struct Atom {
    double t;
    double pi;
  };
  std::vector<Atom> atoms;

  void check() const {
    if (atoms.empty()) throw std::invalid_argument("SpectralMeasure: no atoms");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.t > 0.0))
        throw std::invalid_argument("SpectralMeasure: atom locations must be positive");
      if (!(a.pi >= 0.0))
        throw std::invalid_argument("SpectralMeasure: atom weights must be nonnegative");
      total += a.pi;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("SpectralMeasure: weights must sum to 1");
  }

  static SpectralMeasure dirac(double t) { return SpectralMeasure{{{t, 1.0}}}; }

  // Exact empirical spectral measure: one atom of weight 1/p per eigenvalue.
  static SpectralMeasure from_spectrum(const Spectrum& s) {
    SpectralMeasure h;
    const double w = 1.0 / static_cast<double>(s.eigenvalues.size());
    for (double t : s.eigenvalues) h.atoms.push_back({t, w});
    return h;
  }
};

struct StieltjesSolution {
  std::complex<double> z;
  std::complex<double> s;
  double residual = 0.0;  // |s - F(s)| under the fixed-point map
  int iterations = 0;
};

struct StieltjesOptions {
  double damping = 0.5;
  double tol = 1e-12;   // stop when |s_{k+1} - s_k| < tol
  int max_iter = 10000;
};

class StieltjesError : public std::runtime_error {
 public:
  StieltjesError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  [[nodiscard]] double residual() const { return residual_; }

 private:
  double residual_;
};

// Solves the generalized Marchenko-Pastur self-consistency equation
//   s = sum_k pi_k / ( t_k (1 - y - y z s) - z )
// by damped Picard iteration from s0 = -1/z.  The solution is the Stieltjes
// transform of the limiting spectral law, so Im s > 0 is enforced whenever
// Im z > 0; an iterate that leaves the upper half plane is projected back
// and persistent violation surfaces as non-convergence.
inline StieltjesSolution stieltjes_solve(const SpectralMeasure& h, double y,
                                         std::complex<double> z,
                                         const StieltjesOptions& opt = {}) {
  h.check();
  if (!(y > 0.0 && y < 1.0))
    throw std::invalid_argument("stieltjes_solve: y must lie in (0,1)");
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("stieltjes_solve: need Im z > 0");

  const auto map = [&](std::complex<double> s) {
    const std::complex<double> core = 1.0 - y - y * z * s;
    std::complex<double> acc = 0.0;
    for (const auto& atom : h.atoms) acc += atom.pi / (atom.t * core - z);
    return acc;
  };

  std::complex<double> s = -1.0 / z;
  double step = 0.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const std::complex<double> fs = map(s);
    std::complex<double> next = (1.0 - opt.damping) * s + opt.damping * fs;
    if (!(next.imag() > 0.0))
      next = std::complex<double>(next.real(), 1e-30);
    step = std::abs(next - s);
    s = next;
    if (step < opt.tol) {
      const double resid = std::abs(s - map(s));
      if (!(s.imag() > 0.0))
        throw StieltjesError("stieltjes_solve: converged outside the upper half plane",
                             resid);
      return StieltjesSolution{z, s, resid, it};
    }
  }
  throw StieltjesError("stieltjes_solve: no convergence within max_iter",
                       std::abs(s - map(s)));
}

// Density curve recovered by Stieltjes inversion rho(x) = Im s(x + i eta) / pi.
// Solver failures flag the point instead of aborting the curve.
struct DensityCurve {
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<char> ok;

  [[nodiscard]] int flagged() const {
    int c = 0;
    for (char v : ok)
      if (!v) ++c;
    return c;
  }
};

inline DensityCurve density_from_stieltjes(const SpectralMeasure& h, double y,
                                           const std::vector<double>& grid,
                                           double eta,
                                           const StieltjesOptions& opt = {}) {
  if (!(eta > 0.0))
    throw std::invalid_argument("density_from_stieltjes: eta must be positive");
  constexpr double pi = 3.141592653589793238462643383279502884;
  DensityCurve curve;
  curve.x = grid;
  curve.rho.resize(grid.size(), 0.0);
  curve.ok.resize(grid.size(), 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const auto sol = stieltjes_solve(h, y, {grid[i], eta}, opt);
      curve.rho[i] = sol.s.imag() / pi;
    } catch (const StieltjesError&) {
      curve.rho[i] = std::numeric_limits<double>::quiet_NaN();
      curve.ok[i] = 0;
    }
  }
  return curve;
}

// Piecewise-linear CDF interpolant of a density curve (trapezoid prefix
// integral, normalized to total mass one).  Flagged points are dropped.
inline std::function<double(double)> curve_cdf(const DensityCurve& curve) {
  std::vector<double> xs, fs;
  for (std::size_t i = 0; i < curve.x.size(); ++i)
    if (curve.ok[i]) {
      xs.push_back(curve.x[i]);
      fs.push_back(curve.rho[i]);
    }
  if (xs.size() < 2)
    throw std::invalid_argument("curve_cdf: fewer than two usable points");
  std::vector<double> cum(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i)
    cum[i] = cum[i - 1] + 0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]);
  const double total = cum.back();
  if (!(total > 0.0)) throw std::invalid_argument("curve_cdf: zero total mass");
  return [xs, cum, total](double x) {
    if (x <= xs.front()) return 0.0;
    if (x >= xs.back()) return 1.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto k = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return (cum[k - 1] + t * (cum[k] - cum[k - 1])) / total;
  };
}

}  // namespace robcov
