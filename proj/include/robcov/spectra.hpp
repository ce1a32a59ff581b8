#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "robcov/linalg.hpp"

namespace robcov {

// Real spectrum of a symmetric matrix, ascending.
struct Spectrum {
  std::vector<double> eigenvalues;

  [[nodiscard]] double min() const { return eigenvalues.front(); }
  [[nodiscard]] double max() const { return eigenvalues.back(); }
  [[nodiscard]] double sum() const {
    double s = 0.0;
    for (double v : eigenvalues) s += v;
    return s;
  }
};

inline Spectrum eigenvalues_sym(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("eigenvalues_sym: matrix must be square");
  if (!is_symmetric(m))
    throw std::invalid_argument("eigenvalues_sym: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalues_sym: eigensolver failed");
  Spectrum s;
  s.eigenvalues.assign(es.eigenvalues().data(),
                       es.eigenvalues().data() + es.eigenvalues().size());
  return s;
}

// Flips v so its largest-magnitude coordinate is positive; resolves the
// eigenvector sign ambiguity deterministically.
inline void normalize_eigenvector_sign(Vector& v) {
  Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0.0) v = -v;
}

// Right-continuous step CDF of a finite point set.
class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(std::vector<double> points) : pts_(std::move(points)) {
    if (pts_.empty()) throw std::invalid_argument("EmpiricalCDF: empty support");
    std::sort(pts_.begin(), pts_.end());
  }

  [[nodiscard]] double operator()(double x) const {
    const auto it = std::upper_bound(pts_.begin(), pts_.end(), x);
    return static_cast<double>(it - pts_.begin()) /
           static_cast<double>(pts_.size());
  }

  [[nodiscard]] const std::vector<double>& points() const { return pts_; }

 private:
  std::vector<double> pts_;
};

inline EmpiricalCDF empirical_cdf(const Spectrum& s) {
  return EmpiricalCDF(s.eigenvalues);
}

// sup_x |F(x) - G(x)| for a step CDF F against a reference CDF G, evaluated
// on both sides of every jump.  Tied points form one jump, and G's left
// limit is taken just below the jump so that a reference with the same
// steps as F scores exactly zero.
inline double ks_distance(const EmpiricalCDF& f,
                          const std::function<double(double)>& g) {
  const auto& pts = f.points();
  const double m = static_cast<double>(pts.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    while (j < pts.size() && pts[j] == pts[i]) ++j;
    const double below = g(std::nextafter(pts[i], -std::numeric_limits<double>::infinity()));
    const double at = g(pts[i]);
    d = std::max(d, std::abs(below - static_cast<double>(i) / m));
    d = std::max(d, std::abs(at - static_cast<double>(j) / m));
    i = j;
  }
  return d;
}

namespace detail {

// Adaptive Simpson with an explicit error budget.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double fa, double fm, double fb,
                               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

inline std::pair<double, double> mp_support(double y) {
  if (!(y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("mp_support: y must lie in [0,1]");
  const double s = std::sqrt(y);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

// Marchenko-Pastur reference law for aspect ratio y.  The density carries
// the unit-mass prefactor 1/(2 pi y x); the CDF is cached quadrature of the
// density on a 1024-panel grid.
class MPLaw {
 public:
  explicit MPLaw(double y) : y_(y) {
    if (!(y > 0.0 && y <= 1.0))
      throw std::invalid_argument("MPLaw: y must lie in (0,1]");
    std::tie(lo_, hi_) = mp_support(y);
  }

  [[nodiscard]] double y() const { return y_; }
  [[nodiscard]] double lower_edge() const { return lo_; }
  [[nodiscard]] double upper_edge() const { return hi_; }

  [[nodiscard]] double density(double x) const {
    if (x <= lo_ || x >= hi_) return 0.0;
    return std::sqrt((hi_ - x) * (x - lo_)) / (2.0 * pi_ * y_ * x);
  }

  [[nodiscard]] double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    build_cache();
    const double w = (hi_ - lo_) / panels_;
    const auto k = static_cast<std::size_t>((x - lo_) / w);
    const std::size_t kk = std::min(k, static_cast<std::size_t>(panels_ - 1));
    const double a = lo_ + w * static_cast<double>(kk);
    const double tail = detail::integrate([this](double t) { return density(t); },
                                          a, x, 1e-9 / panels_);
    return std::clamp(cum_[kk] + tail, 0.0, 1.0);
  }

 private:
  void build_cache() const {
    if (!cum_.empty()) return;
    cum_.resize(static_cast<std::size_t>(panels_) + 1, 0.0);
    const double w = (hi_ - lo_) / panels_;
    for (int k = 0; k < panels_; ++k) {
      const double a = lo_ + w * k;
      const double b = (k + 1 == panels_) ? hi_ : a + w;
      cum_[static_cast<std::size_t>(k) + 1] =
          cum_[static_cast<std::size_t>(k)] +
          detail::integrate([this](double t) { return density(t); }, a, b,
                            1e-9 / panels_);
    }
  }

  static constexpr double pi_ = 3.141592653589793238462643383279502884;
  static constexpr int panels_ = 1024;
  double y_, lo_ = 0.0, hi_ = 0.0;
  mutable std::vector<double> cum_;
};

// Density of the Marchenko-Pastur law at x.
inline double mp_density(double y, double x) {
  if (!(y > 0.0 && y < 1.0))
    throw std::invalid_argument("mp_density: y must lie in (0,1)");
  return MPLaw(y).density(x);
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;
};

inline Histogram make_histogram(const std::vector<double>& values, int bins = 100) {
  if (values.empty()) throw std::invalid_argument("make_histogram: no values");
  if (bins < 1) throw std::invalid_argument("make_histogram: bins must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) hi = lo + 1.0;  // degenerate range
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int k = 0; k <= bins; ++k)
    h.edges[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / bins;
  for (double v : values) {
    auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    if (k >= static_cast<std::size_t>(bins)) k = static_cast<std::size_t>(bins) - 1;
    ++h.counts[k];
  }
  return h;
}

}  // namespace robcov
