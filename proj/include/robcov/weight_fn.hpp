#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace robcov {

// Maronna weight function u on [0, inf) with psi(x) = x * u(x).
// A closed-form psi inverse may be attached; psi_inverse() falls back to
// bisection when it is absent.
struct WeightFn {
  std::function<double(double)> u;
  std::optional<std::function<double(double)>> psi_inv;
  std::string name;

  [[nodiscard]] double psi(double x) const { return x * u(x); }
};

namespace weight_fns {

inline WeightFn one() {
  return WeightFn{[](double) { return 1.0; },
                  [](double t) { return t; }, "one"};
}

// u(x) = x^beta.  psi(x) = x^{1+beta}: increasing for beta > -1,
// and x u'(x) = beta u(x) < u(x) for beta < 1.
inline WeightFn power(double beta) {
  if (!(beta > -1.0))
    throw std::invalid_argument("power weight: beta must exceed -1");
  return WeightFn{[beta](double x) { return std::pow(x, beta); },
                  [beta](double t) { return std::pow(t, 1.0 / (1.0 + beta)); },
                  "power:" + std::to_string(beta)};
}

// u(x) = (1+alpha)/(alpha+x), the classic redescending-in-psi weight.
// psi increases to the finite limit 1+alpha; psi^{-1}(t) = t*alpha/(1+alpha-t).
inline WeightFn rational(double alpha) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("rational weight: alpha must be positive");
  return WeightFn{
      [alpha](double x) { return (1.0 + alpha) / (alpha + x); },
      [alpha](double t) {
        if (!(t < 1.0 + alpha))
          throw std::domain_error("psi_inverse: t beyond the range of psi");
        return t * alpha / (1.0 + alpha - t);
      },
      "rational:" + std::to_string(alpha)};
}

}  // namespace weight_fns

// Evaluation grid for validate_u: log-spaced points covering (0, x_max].
// y is the aspect ratio p/n the psi tail is checked against.
struct GridSpec {
  double x_max = 10.0;
  int points = 512;
  double y = 0.0;

  static GridSpec for_ratio(double y) {
    return GridSpec{std::max(10.0 * y, 10.0), 512, y};
  }

  [[nodiscard]] std::vector<double> values() const {
    if (!(x_max > 0.0) || points < 2)
      throw std::invalid_argument("GridSpec: need x_max > 0 and points >= 2");
    std::vector<double> xs(static_cast<std::size_t>(points));
    const double lo = std::log(x_max * 1e-6);
    const double hi = std::log(x_max);
    for (int k = 0; k < points; ++k)
      xs[static_cast<std::size_t>(k)] =
          std::exp(lo + (hi - lo) * k / (points - 1));
    xs.back() = x_max;
    return xs;
  }
};

struct ValidationReport {
  bool positive = false;            // u > 0 on the grid
  bool psi_increasing = false;      // psi strictly increasing on the grid
  bool psi_tail_exceeds_y = false;  // psi(x_max) > y
  bool derivative_bound = false;    // x u'(x) < u(x) on the grid
  double min_u = 0.0;
  double psi_at_xmax = 0.0;

  [[nodiscard]] bool a1() const { return psi_increasing && psi_tail_exceeds_y; }
  [[nodiscard]] bool a2() const { return derivative_bound; }
  [[nodiscard]] bool ok() const { return positive && a1() && a2(); }
};

// Grid checks of the two weight-function assumptions: monotone psi with a
// tail above y, and the derivative bound x u'(x) < u(x) via central
// differences.  Failures are reported, never thrown.
inline ValidationReport validate_u(const WeightFn& fn, const GridSpec& grid) {
  const auto xs = grid.values();
  ValidationReport rep;

  rep.positive = true;
  rep.min_u = fn.u(xs.front());
  for (double x : xs) {
    const double ux = fn.u(x);
    rep.min_u = std::min(rep.min_u, ux);
    if (!(ux > 0.0) || !std::isfinite(ux)) rep.positive = false;
  }

  rep.psi_increasing = true;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const double lo_v = fn.psi(xs[k - 1]);
    const double hi_v = fn.psi(xs[k]);
    // strict increase beyond rounding wobble, so a constant psi fails
    if (!(hi_v - lo_v > 1e-12 * std::max(1.0, std::abs(hi_v))))
      rep.psi_increasing = false;
  }

  rep.psi_at_xmax = fn.psi(grid.x_max);
  rep.psi_tail_exceeds_y = rep.psi_at_xmax > grid.y;

  rep.derivative_bound = true;
  constexpr double h_rel = 1e-6;
  for (double x : xs) {
    const double h = h_rel * x;
    const double du = (fn.u(x + h) - fn.u(x - h)) / (2.0 * h);
    const double slack = 1e-9 * std::max(1.0, std::abs(fn.u(x)));
    if (!(x * du < fn.u(x) - slack)) rep.derivative_bound = false;
  }
  return rep;
}

// x with |psi(x) - t| < 1e-12 * max(1, t).  Uses the closed form when the
// weight function carries one, otherwise bisection after geometric bracket
// expansion.  t outside the range of psi raises a domain error.
inline double psi_inverse(const WeightFn& fn, double t) {
  if (!(t > 0.0))
    throw std::domain_error("psi_inverse: t must lie inside the range of psi");
  if (fn.psi_inv) return (*fn.psi_inv)(t);

  const double tol = 1e-12 * std::max(1.0, t);
  double lo = 1.0, hi = 1.0;
  while (fn.psi(hi) < t) {
    hi *= 2.0;
    if (hi > 1e300)
      throw std::domain_error("psi_inverse: t beyond the range of psi");
  }
  while (fn.psi(lo) > t) {
    lo *= 0.5;
    if (lo < 1e-300)
      throw std::domain_error("psi_inverse: t below the range of psi");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double val = fn.psi(mid);
    if (std::abs(val - t) < tol) return mid;
    (val < t ? lo : hi) = mid;
    if (hi - lo <= 1e-16 * std::max(1.0, mid)) break;
  }
  const double mid = 0.5 * (lo + hi);
  if (std::abs(fn.psi(mid) - t) < 1e-9 * std::max(1.0, t)) return mid;
  throw std::runtime_error("psi_inverse: bisection failed to converge");
}

}  // namespace robcov
