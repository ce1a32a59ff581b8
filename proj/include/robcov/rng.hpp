#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

// Deterministic random number generation.
//
// All randomness flows through Rng: a mt19937_64 engine plus hand-rolled
// transforms (Box-Muller normals, Marsaglia-Tsang gamma).  The standard
// library distributions are avoided on purpose: their output sequences are
// implementation-defined, while mt19937_64 itself and the transforms below
// are fully specified, so a (seed, n, p) triple reproduces bit-identical
// samples on any platform with IEEE doubles.

namespace robcov {

// Finalizer from splitmix64; full-avalanche 64-bit mix.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Identifies one reproducible random stream.  The per-trial stream seed is
// splitmix64(splitmix64(master) ^ (trial + golden)); distinct trial indices
// yield decorrelated engines, so trials may run concurrently with no shared
// generator state.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t trial = 0;

  [[nodiscard]] constexpr std::uint64_t stream() const {
    return splitmix64(splitmix64(master) ^ (trial + 0x9e3779b97f4a7c15ULL));
  }
  [[nodiscard]] constexpr SeedSpec for_trial(std::uint64_t t) const {
    return SeedSpec{master, t};
  }
};

class Rng {
 public:
  explicit Rng(SeedSpec spec) : engine_(spec.stream()) {}
  explicit Rng(std::uint64_t master) : Rng(SeedSpec{master, 0}) {}

  // Uniform on (0,1), 53-bit resolution.  Zero is rejected so that
  // log(uniform()) is always finite.
  double uniform() {
    for (;;) {
      const double u =
          static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, which is part of the generator state and deterministic.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * pi_ * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Gamma(shape, scale 1), Marsaglia-Tsang squeeze for shape >= 1 and the
  // boost trick gamma(a) = gamma(a+1) * U^{1/a} below 1.
  double gamma(double shape) {
    if (!(shape > 0.0))
      throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0)
      return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0, v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  std::uint64_t raw() { return engine_(); }

 private:
  static constexpr double pi_ = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace robcov
