#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "robcov/estimators.hpp"
#include "robcov/io.hpp"
#include "robcov/rmt.hpp"
#include "robcov/sampling.hpp"
#include "robcov/spectra.hpp"
#include "robcov/tolerances.hpp"

namespace robcov {

// One experiment run is a pure function of its config; the master seed and
// per-trial stream derivation make trial order and thread count irrelevant
// to the reported numbers.
struct ExperimentConfig {
  std::string kind;                 // convergence | largest-eig | esd | spike | calibrate
  std::string estimator = "tyler";  // sample | tyler | maronna
  std::string weight_fn = "one";    // one | power:<beta> | rational:<alpha>
  std::string dist = "gaussian";    // gaussian | gaussian-cov | elliptical-t | fixed-radius
  std::string scaling = "derived";  // maronna scaling convention: paper | derived
  double y = 0.2;
  int n = 0;
  int p = 0;
  std::vector<int> ns;              // sweep sizes (convergence)
  int reps = 5;
  int model = 1;                    // spike model
  double nu = 1.0;                  // elliptical-t degrees of freedom
  double fixed_radius = 1.0;
  std::vector<double> shape_spikes; // spike amplitudes for a diagonal shape
  std::string shape_file;           // CSV with a full shape matrix
  SolverConfig solver;
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline void to_json(json& j, const SolverConfig& cfg) {
  j = json{{"tol", cfg.tol}, {"max_iter", cfg.max_iter}, {"damping", cfg.damping}};
}

inline void from_json(const json& j, SolverConfig& cfg) {
  for (const auto& [key, _] : j.items())
    if (key != "tol" && key != "max_iter" && key != "damping")
      throw std::runtime_error("solver config: unknown key '" + key + "'");
  cfg.tol = j.value("tol", cfg.tol);
  cfg.max_iter = j.value("max_iter", cfg.max_iter);
  cfg.damping = j.value("damping", cfg.damping);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"kind", c.kind},
           {"estimator", c.estimator},
           {"weight_fn", c.weight_fn},
           {"dist", c.dist},
           {"scaling", c.scaling},
           {"y", c.y},
           {"n", c.n},
           {"p", c.p},
           {"ns", c.ns},
           {"reps", c.reps},
           {"model", c.model},
           {"nu", c.nu},
           {"fixed_radius", c.fixed_radius},
           {"shape_spikes", c.shape_spikes},
           {"shape_file", c.shape_file},
           {"solver", c.solver},
           {"seed", c.seed},
           {"jobs", c.jobs}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  static const std::vector<std::string> known = {
      "kind", "estimator", "weight_fn", "dist", "scaling", "y", "n", "p",
      "ns", "reps", "model", "nu", "fixed_radius", "shape_spikes",
      "shape_file", "solver", "seed", "jobs"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::runtime_error("experiment config: unknown key '" + key + "'");
  c.kind = j.value("kind", c.kind);
  c.estimator = j.value("estimator", c.estimator);
  c.weight_fn = j.value("weight_fn", c.weight_fn);
  c.dist = j.value("dist", c.dist);
  c.scaling = j.value("scaling", c.scaling);
  c.y = j.value("y", c.y);
  c.n = j.value("n", c.n);
  c.p = j.value("p", c.p);
  c.ns = j.value("ns", c.ns);
  c.reps = j.value("reps", c.reps);
  c.model = j.value("model", c.model);
  c.nu = j.value("nu", c.nu);
  c.fixed_radius = j.value("fixed_radius", c.fixed_radius);
  c.shape_spikes = j.value("shape_spikes", c.shape_spikes);
  c.shape_file = j.value("shape_file", c.shape_file);
  if (j.contains("solver")) c.solver = j["solver"].get<SolverConfig>();
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
}

// "one" | "power:<beta>" | "rational:<alpha>"
inline WeightFn weight_fn_from_name(const std::string& name) {
  if (name == "one") return weight_fns::one();
  if (name.rfind("power:", 0) == 0)
    return weight_fns::power(std::stod(name.substr(6)));
  if (name.rfind("rational:", 0) == 0)
    return weight_fns::rational(std::stod(name.substr(9)));
  throw std::invalid_argument("unknown weight function: " + name);
}

inline ScalingConvention scaling_from_name(const std::string& name) {
  if (name == "paper") return ScalingConvention::paper;
  if (name == "derived") return ScalingConvention::derived;
  throw std::invalid_argument("unknown scaling convention: " + name);
}

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string cmp;  // "<=" or ">="
  bool passed = false;
};

inline void to_json(json& j, const CheckResult& c) {
  j = json{{"name", c.name},
           {"value", c.value},
           {"threshold", c.threshold},
           {"cmp", c.cmp},
           {"passed", c.passed}};
}

inline CheckResult check_le(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<=", value <= threshold};
}

inline CheckResult check_ge(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, ">=", value >= threshold};
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Runs body(0..reps-1); trial results must land in pre-sized slots so the
// aggregation is a deterministic fold over trial index regardless of jobs.
template <class Fn>
inline void for_each_trial(int reps, int jobs, Fn&& body) {
  jobs = std::clamp(jobs, 1, reps);
  if (jobs <= 1) {
    for (int t = 0; t < reps; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int k = 0; k < jobs; ++k)
    pool.emplace_back([&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= reps) break;
        body(t);
      }
    });
  for (auto& th : pool) th.join();
}

inline ShapeMatrix shape_from_config(const ExperimentConfig& c, Index p) {
  if (!c.shape_file.empty()) return ShapeMatrix(read_csv(c.shape_file));
  if (!c.shape_spikes.empty()) return spike_shape(p, c.shape_spikes);
  return ShapeMatrix::identity(p);
}

inline DataMatrix data_from_config(const ExperimentConfig& c, Index n, Index p,
                                   SeedSpec seed) {
  if (c.dist == "gaussian") return sample_gaussian(n, p, seed);
  const ShapeMatrix t = shape_from_config(c, p);
  if (c.dist == "gaussian-cov")
    return sample_with_shape(n, t, GaussianRadius{}, seed);
  if (c.dist == "elliptical-t")
    return sample_with_shape(n, t, StudentTRadius{c.nu}, seed);
  if (c.dist == "fixed-radius")
    return sample_with_shape(n, t, FixedRadius{c.fixed_radius}, seed);
  throw std::invalid_argument("unknown distribution: " + c.dist);
}

struct ScaledEstimate {
  Matrix scaled;
  CovarianceEstimate estimate;
  double scaling = 1.0;
};

// Scaled estimator comparable to S_n: p Sigma_tyler, the convention-scaled
// Maronna fixed point, or S_n itself.
inline ScaledEstimate scaled_estimate(const ExperimentConfig& c,
                                      const DataMatrix& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  ScaledEstimate out;
  if (c.estimator == "sample") {
    out.estimate = sample_covariance(x);
    out.scaling = 1.0;
    out.scaled = out.estimate.matrix;
  } else if (c.estimator == "tyler") {
    out.estimate = tyler_estimate(x, c.solver);
    out.scaling = static_cast<double>(p);
    out.scaled = out.scaling * out.estimate.matrix;
  } else if (c.estimator == "maronna") {
    const WeightFn fn = weight_fn_from_name(c.weight_fn);
    out.estimate = maronna_estimate(x, fn, c.solver);
    out.scaling = maronna_scaling(fn, static_cast<double>(p) / static_cast<double>(n),
                                  n, scaling_from_name(c.scaling));
    out.scaled = out.scaling * out.estimate.matrix;
  } else {
    throw std::invalid_argument("unknown estimator: " + c.estimator);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// convergence sweep: || scaled estimator - S_n || and weight sup-errors over
// increasing n at fixed aspect ratio, with a fitted log-log slope.
// ---------------------------------------------------------------------------

struct ConvergenceReport {
  ExperimentConfig config;
  std::vector<int> ns;
  std::vector<double> median_norm;        // per n
  std::vector<double> median_weight_err;  // per n
  std::vector<int> failures;              // per n
  double slope = 0.0;
  std::string warning;
  std::vector<CheckResult> checks;

  [[nodiscard]] json to_json() const {
    json j{{"config", config},
           {"ns", ns},
           {"median_norm", median_norm},
           {"median_weight_err", median_weight_err},
           {"failures", failures},
           {"slope", slope},
           {"warning", warning},
           {"checks", checks}};
    return j;
  }
};

inline ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
  if (cfg.ns.size() < 2)
    throw std::invalid_argument("convergence sweep needs at least two sizes");
  if (!std::is_sorted(cfg.ns.begin(), cfg.ns.end()))
    throw std::invalid_argument("convergence sweep sizes must increase");
  if (cfg.reps < 3)
    throw std::invalid_argument("convergence sweep needs reps >= 3");
  if (cfg.estimator != "tyler" && cfg.estimator != "maronna")
    throw std::invalid_argument("convergence sweep supports tyler or maronna");

  const WeightFn fn = weight_fn_from_name(cfg.weight_fn);
  const double weight_limit =
      cfg.estimator == "maronna" ? psi_inverse(fn, cfg.y) : 1.0;

  ConvergenceReport rep;
  rep.config = cfg;
  rep.ns = cfg.ns;

  int trial_base = 0;
  int total_failures = 0, total_trials = 0;
  for (int nk : cfg.ns) {
    const double pd = cfg.y * nk;
    const auto p = static_cast<Index>(std::llround(pd));
    if (std::abs(pd - static_cast<double>(p)) > 1e-9)
      throw std::invalid_argument("convergence sweep: y*n must be integral");

    std::vector<std::optional<double>> norms(static_cast<std::size_t>(cfg.reps));
    std::vector<std::optional<double>> werrs(static_cast<std::size_t>(cfg.reps));
    std::vector<std::optional<std::string>> errs(static_cast<std::size_t>(cfg.reps));

    detail::for_each_trial(cfg.reps, cfg.jobs, [&](int t) {
      try {
        const SeedSpec seed{cfg.seed, static_cast<std::uint64_t>(trial_base + t)};
        const DataMatrix x = sample_gaussian(nk, p, seed);
        const Matrix s_n =
            weighted_gram(x, Vector::Ones(nk)) / static_cast<double>(nk);
        const auto se = detail::scaled_estimate(cfg, x);
        if (!se.estimate.converged)
          throw std::runtime_error("estimator did not converge");
        norms[static_cast<std::size_t>(t)] = operator_norm_diff(se.scaled, s_n);
        const Vector& w = se.estimate.weights;
        double werr = 0.0;
        if (cfg.estimator == "tyler")
          werr = (static_cast<double>(nk) * w.array() - 1.0).abs().maxCoeff();
        else
          werr = (w.array() - weight_limit).abs().maxCoeff();
        werrs[static_cast<std::size_t>(t)] = werr;
      } catch (const std::exception& e) {
        errs[static_cast<std::size_t>(t)] = e.what();
      }
    });
    trial_base += cfg.reps;

    std::vector<double> okn, okw;
    int nfail = 0;
    for (int t = 0; t < cfg.reps; ++t) {
      if (errs[static_cast<std::size_t>(t)]) {
        ++nfail;
        continue;
      }
      okn.push_back(*norms[static_cast<std::size_t>(t)]);
      okw.push_back(*werrs[static_cast<std::size_t>(t)]);
    }
    if (okn.empty())
      throw std::runtime_error("convergence sweep: all trials failed at n=" +
                               std::to_string(nk));
    rep.median_norm.push_back(detail::median(okn));
    rep.median_weight_err.push_back(detail::median(okw));
    rep.failures.push_back(nfail);
    total_failures += nfail;
    total_trials += cfg.reps;
  }

  if (total_trials > 0 &&
      static_cast<double>(total_failures) / total_trials > 0.10)
    rep.warning = "more than 10% of trials failed; medians use survivors only";

  // least squares on (log n, log median norm)
  const auto k = rep.ns.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lx = std::log(static_cast<double>(rep.ns[i]));
    const double ly = std::log(rep.median_norm[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double kk = static_cast<double>(k);
  rep.slope = (kk * sxy - sx * sy) / (kk * sxx - sx * sx);

  bool monotone = true;
  for (std::size_t i = 1; i < k; ++i)
    if (!(rep.median_norm[i] < rep.median_norm[i - 1])) monotone = false;
  rep.checks.push_back(
      {"median_norms_strictly_decreasing", monotone ? 1.0 : 0.0, 1.0, ">=", monotone});
  if (cfg.estimator == "tyler") {
    rep.checks.push_back(check_ge("slope_ge_lo", rep.slope, tolerances::sweep_slope_lo));
    rep.checks.push_back(check_le("slope_le_hi", rep.slope, tolerances::sweep_slope_hi));
  }
  rep.checks.push_back(check_le("weight_err_last_vs_first",
                                rep.median_weight_err.back(),
                                rep.median_weight_err.front()));
  for (std::size_t i = 0; i < k; ++i)
    if (rep.ns[i] == 2000 && cfg.estimator == "tyler")
      rep.checks.push_back(check_le("tyler_weight_sup_n2000",
                                    rep.median_weight_err[i],
                                    tolerances::tyler_weight_sup_envelope));
  return rep;
}

// ---------------------------------------------------------------------------
// largest eigenvalue of the scaled estimator vs the bulk edge (1+sqrt(y))^2
// ---------------------------------------------------------------------------

struct LargestEigReport {
  ExperimentConfig config;
  std::vector<double> lambda_max;  // per rep (successes)
  int failures = 0;
  double mean_lambda_max = 0.0;
  double target = 0.0;
  double abs_deviation = 0.0;
  std::vector<CheckResult> checks;

  [[nodiscard]] json to_json() const {
    return json{{"config", config},
                {"lambda_max", lambda_max},
                {"failures", failures},
                {"mean_lambda_max", mean_lambda_max},
                {"target", target},
                {"abs_deviation", abs_deviation},
                {"checks", checks}};
  }
};

inline LargestEigReport run_largest_eig(const ExperimentConfig& cfg) {
  if (!(cfg.y > 0.0 && cfg.y < 1.0))
    throw std::invalid_argument("largest-eig: y must lie in (0,1)");
  const int n = cfg.n;
  const auto p = static_cast<Index>(std::llround(cfg.y * n));
  if (std::abs(cfg.y * n - static_cast<double>(p)) > 1e-9)
    throw std::invalid_argument("largest-eig: y*n must be integral");

  LargestEigReport rep;
  rep.config = cfg;
  rep.target = (1.0 + std::sqrt(cfg.y)) * (1.0 + std::sqrt(cfg.y));

  std::vector<std::optional<double>> lams(static_cast<std::size_t>(cfg.reps));
  detail::for_each_trial(cfg.reps, cfg.jobs, [&](int t) {
    try {
      const SeedSpec seed{cfg.seed, static_cast<std::uint64_t>(t)};
      const DataMatrix x = detail::data_from_config(cfg, n, p, seed);
      const auto se = detail::scaled_estimate(cfg, x);
      if (!se.estimate.converged)
        throw std::runtime_error("estimator did not converge");
      lams[static_cast<std::size_t>(t)] =
          eigenvalues_sym(se.scaled).eigenvalues.back();
    } catch (const std::exception&) {
      // recorded below as a failure
    }
  });
  for (const auto& l : lams)
    if (l)
      rep.lambda_max.push_back(*l);
    else
      ++rep.failures;
  if (rep.lambda_max.empty())
    throw std::runtime_error("largest-eig: all trials failed");
  rep.mean_lambda_max = detail::mean(rep.lambda_max);
  rep.abs_deviation = std::abs(rep.mean_lambda_max - rep.target);
  rep.checks.push_back(check_le("largest_eig_abs_deviation", rep.abs_deviation,
                                tolerances::largest_eig_abs));
  return rep;
}

// ---------------------------------------------------------------------------
// empirical spectral distribution of the scaled estimator vs its limit law
// ---------------------------------------------------------------------------

struct EsdReport {
  ExperimentConfig config;
  Spectrum spectrum;     // of the scaled estimator
  std::string law;       // "mp" or "generalized"
  double ks = 0.0;
  double trace_scaling = 0.0;  // multiplier applied to the estimator
  std::vector<CheckResult> checks;

  [[nodiscard]] json to_json() const {
    return json{{"config", config},
                {"law", law},
                {"ks", ks},
                {"trace_scaling", trace_scaling},
                {"eigenvalues", spectrum.eigenvalues},
                {"checks", checks}};
  }
};

namespace detail {

struct ReferenceLaw {
  std::string kind;
  std::function<double(double)> cdf;
};

inline ReferenceLaw reference_law(const ExperimentConfig& cfg, Index p) {
  const ShapeMatrix t = shape_from_config(cfg, p);
  if (cfg.dist == "gaussian" || t.is_identity()) {
    auto law = std::make_shared<MPLaw>(cfg.y);
    return {"mp", [law](double x) { return law->cdf(x); }};
  }
  const Spectrum ts = eigenvalues_sym(t.matrix());
  const SpectralMeasure h = SpectralMeasure::from_spectrum(ts);
  const auto [mp_lo, mp_hi] = mp_support(cfg.y);
  const double lo = std::max(1e-6, 0.5 * mp_lo * ts.min());
  const double hi = 1.3 * mp_hi * ts.max();
  std::vector<double> grid(600);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (grid.size() - 1);
  const DensityCurve curve = density_from_stieltjes(h, cfg.y, grid, 1e-3);
  return {"generalized", curve_cdf(curve)};
}

}  // namespace detail

inline EsdReport run_esd(const ExperimentConfig& cfg) {
  const Index n = cfg.n;
  const Index p = cfg.p;
  if (n < 1 || p < 1) throw std::invalid_argument("esd: need n and p");

  // estimator / distribution compatibility: Tyler handles any elliptical
  // sample, Maronna and the sample covariance require Gaussian data
  if ((cfg.estimator == "maronna" || cfg.estimator == "sample") &&
      cfg.dist != "gaussian" && cfg.dist != "gaussian-cov")
    throw std::invalid_argument("esd: " + cfg.estimator +
                                " supports gaussian data only");

  ExperimentConfig c = cfg;
  c.y = static_cast<double>(p) / static_cast<double>(n);

  const DataMatrix x = detail::data_from_config(c, n, p, SeedSpec{c.seed, 0});
  const ShapeMatrix t = detail::shape_from_config(c, p);

  EsdReport rep;
  rep.config = cfg;

  Matrix scaled;
  if (c.estimator == "tyler") {
    const auto est = tyler_estimate(x, c.solver);
    if (!est.converged) throw std::runtime_error("esd: tyler did not converge");
    rep.trace_scaling = t.matrix().trace();  // = p for spherical models
    scaled = rep.trace_scaling * est.matrix;
  } else {
    const auto se = detail::scaled_estimate(c, x);
    if (!se.estimate.converged)
      throw std::runtime_error("esd: estimator did not converge");
    rep.trace_scaling = se.scaling;
    scaled = se.scaled;
  }

  rep.spectrum = eigenvalues_sym(scaled);
  const auto law = detail::reference_law(c, p);
  rep.law = law.kind;
  rep.ks = ks_distance(empirical_cdf(rep.spectrum), law.cdf);
  rep.checks.push_back(check_le("ks_vs_" + rep.law, rep.ks,
                                rep.law == "mp" ? tolerances::ks_vs_mp
                                                : tolerances::ks_vs_generalized));
  return rep;
}

// ---------------------------------------------------------------------------
// spiked-model correlation study (heavy-tailed data, one spike)
// ---------------------------------------------------------------------------

struct SpikeReport {
  ExperimentConfig config;
  int reps = 0;
  std::vector<double> tyler_corr;    // per rep
  std::vector<double> sample_corr;   // per rep
  std::vector<std::vector<double>> tyler_eigs;   // per rep, ascending
  std::vector<std::vector<double>> sample_eigs;  // per rep, ascending
  int failures = 0;
  double tyler_mean = 0.0, tyler_std = 0.0;
  double sample_mean = 0.0, sample_std = 0.0;
  std::vector<CheckResult> checks;

  [[nodiscard]] json to_json() const {
    return json{{"config", config},
                {"reps", reps},
                {"data_centering", "uncentered"},  // model 2 keeps its mean shift
                {"tyler_corr", tyler_corr},
                {"sample_corr", sample_corr},
                {"tyler_mean", tyler_mean},
                {"tyler_std", tyler_std},
                {"sample_mean", sample_mean},
                {"sample_std", sample_std},
                {"failures", failures},
                {"tyler_eigenvalues", tyler_eigs},
                {"sample_eigenvalues", sample_eigs},
                {"checks", checks}};
  }
};

inline SpikeReport run_spike(const ExperimentConfig& cfg) {
  if (cfg.model != 1 && cfg.model != 2)
    throw std::invalid_argument("spike: model must be 1 or 2");
  const Index n = cfg.n > 0 ? cfg.n : 200;
  const Index p = cfg.p > 0 ? cfg.p : 20;

  struct TrialOut {
    double tyler_corr = 0.0, sample_corr = 0.0;
    std::vector<double> tyler_eigs, sample_eigs;
    bool ok = false;
  };
  std::vector<TrialOut> out(static_cast<std::size_t>(cfg.reps));

  detail::for_each_trial(cfg.reps, cfg.jobs, [&](int trial) {
    try {
      const SeedSpec seed{cfg.seed, static_cast<std::uint64_t>(trial)};
      DataMatrix x;
      if (cfg.model == 1) {
        const ShapeMatrix t = spike_shape(p, {2.0});
        x = sample_with_shape(n, t, StudentTRadius{1.0}, seed);
      } else {
        // heavy-tailed noise around a fixed unit signal; data stay uncentered
        x = sample_with_shape(n, ShapeMatrix::identity(p), StudentTRadius{1.0}, seed);
        x.col(0).array() += 1.0;
      }

      const auto top_corr = [&](const Matrix& m, std::vector<double>& eigs) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        if (es.info() != Eigen::Success)
          throw std::runtime_error("spike: eigensolver failed");
        eigs.assign(es.eigenvalues().data(),
                    es.eigenvalues().data() + es.eigenvalues().size());
        Vector v = es.eigenvectors().col(p - 1);
        normalize_eigenvector_sign(v);
        return std::abs(v(0));  // spike direction is e_1
      };

      auto& slot = out[static_cast<std::size_t>(trial)];
      const auto tyler = tyler_estimate(x, cfg.solver);
      if (!tyler.converged) throw std::runtime_error("tyler did not converge");
      slot.tyler_corr = top_corr(tyler.matrix, slot.tyler_eigs);
      const auto sample = sample_covariance(x);
      slot.sample_corr = top_corr(sample.matrix, slot.sample_eigs);
      slot.ok = true;
    } catch (const std::exception&) {
      // failure recorded via slot.ok
    }
  });

  SpikeReport rep;
  rep.config = cfg;
  rep.reps = cfg.reps;
  for (auto& slot : out) {
    if (!slot.ok) {
      ++rep.failures;
      continue;
    }
    rep.tyler_corr.push_back(slot.tyler_corr);
    rep.sample_corr.push_back(slot.sample_corr);
    rep.tyler_eigs.push_back(std::move(slot.tyler_eigs));
    rep.sample_eigs.push_back(std::move(slot.sample_eigs));
  }
  if (rep.tyler_corr.empty()) throw std::runtime_error("spike: all trials failed");
  rep.tyler_mean = detail::mean(rep.tyler_corr);
  rep.tyler_std = detail::stddev(rep.tyler_corr);
  rep.sample_mean = detail::mean(rep.sample_corr);
  rep.sample_std = detail::stddev(rep.sample_corr);
  rep.checks.push_back(check_ge("tyler_mean_correlation", rep.tyler_mean,
                                tolerances::spike_tyler_mean_min));
  rep.checks.push_back(check_le("sample_mean_correlation", rep.sample_mean,
                                tolerances::spike_sample_mean_max));
  return rep;
}

// ---------------------------------------------------------------------------
// quadratic-form concentration diagnostics on raw Gaussian data
// ---------------------------------------------------------------------------

struct QuadFormDiagnostic {
  double max_deviation = 0.0;   // max_i |x_i^T S^{-1} x_i / p - 1|
  double a_inf_norm = 0.0;      // ||A||_inf, A_ij = (x_i^T S^{-1} x_j)^2/(n p)

  [[nodiscard]] json to_json() const {
    return json{{"max_deviation", max_deviation}, {"a_inf_norm", a_inf_norm}};
  }
};

inline QuadFormDiagnostic quadratic_form_diagnostic(const DataMatrix& x) {
  detail::check_data(x);
  detail::check_aspect(x);
  const Index n = x.rows();
  const Index p = x.cols();
  const Matrix s = weighted_gram(x, Vector::Ones(n)) / static_cast<double>(n);
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success)
    throw ExistenceError("quadratic_form_diagnostic: singular sample covariance");

  const Matrix ys = llt.matrixL().solve(x.transpose());  // p x n
  QuadFormDiagnostic d;
  const Vector q = ys.colwise().squaredNorm().transpose();
  d.max_deviation = (q.array() / static_cast<double>(p) - 1.0).abs().maxCoeff();

  // A = (Y^T Y).^2 / (n p); row sums of A equal q_i / p by construction
  Matrix a = ys.transpose() * ys;
  a = a.cwiseProduct(a) / (static_cast<double>(n) * static_cast<double>(p));
  d.a_inf_norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  return d;
}

// ---------------------------------------------------------------------------
// scaling-convention calibration for Maronna's estimator
// ---------------------------------------------------------------------------

struct CalibrationReport {
  ExperimentConfig config;
  double median_err_paper = 0.0;
  double median_err_derived = 0.0;
  std::string consistent;  // convention with the smaller error
  double separation = 0.0; // larger / smaller
  double median_weight = 0.0;
  double psi_inv_y = 0.0;        // candidate weight limits
  double psi_inv_inv_y = 0.0;
  int failures = 0;
  std::vector<CheckResult> checks;

  [[nodiscard]] json to_json() const {
    return json{{"config", config},
                {"median_err_paper", median_err_paper},
                {"median_err_derived", median_err_derived},
                {"consistent", consistent},
                {"separation", separation},
                {"median_weight", median_weight},
                {"psi_inv_y", psi_inv_y},
                {"psi_inv_inv_y", psi_inv_inv_y},
                {"failures", failures},
                {"checks", checks}};
  }
};

inline CalibrationReport run_calibration(const ExperimentConfig& cfg) {
  if (!(cfg.y > 0.0 && cfg.y < 1.0))
    throw std::invalid_argument("calibrate: y must lie in (0,1)");
  const int n = cfg.n;
  const auto p = static_cast<Index>(std::llround(cfg.y * n));
  if (std::abs(cfg.y * n - static_cast<double>(p)) > 1e-9)
    throw std::invalid_argument("calibrate: y*n must be integral");
  const WeightFn fn = weight_fn_from_name(cfg.weight_fn);

  CalibrationReport rep;
  rep.config = cfg;
  rep.psi_inv_y = psi_inverse(fn, cfg.y);
  rep.psi_inv_inv_y = psi_inverse(fn, 1.0 / cfg.y);
  const double scale_paper =
      maronna_scaling(fn, cfg.y, n, ScalingConvention::paper);
  const double scale_derived =
      maronna_scaling(fn, cfg.y, n, ScalingConvention::derived);

  struct TrialOut {
    double err_paper = 0.0, err_derived = 0.0, med_weight = 0.0;
    bool ok = false;
  };
  std::vector<TrialOut> out(static_cast<std::size_t>(cfg.reps));

  detail::for_each_trial(cfg.reps, cfg.jobs, [&](int t) {
    try {
      const SeedSpec seed{cfg.seed, static_cast<std::uint64_t>(t)};
      const DataMatrix x = sample_gaussian(n, p, seed);
      const Matrix s_n =
          weighted_gram(x, Vector::Ones(n)) / static_cast<double>(n);
      const auto est = maronna_estimate(x, fn, cfg.solver);
      if (!est.converged) throw std::runtime_error("estimator did not converge");
      auto& slot = out[static_cast<std::size_t>(t)];
      slot.err_paper = operator_norm_diff(Matrix(scale_paper * est.matrix), s_n);
      slot.err_derived = operator_norm_diff(Matrix(scale_derived * est.matrix), s_n);
      slot.med_weight = detail::median(std::vector<double>(
          est.weights.data(), est.weights.data() + est.weights.size()));
      slot.ok = true;
    } catch (const std::exception&) {
    }
  });

  std::vector<double> ep, ed, mw;
  for (const auto& slot : out) {
    if (!slot.ok) {
      ++rep.failures;
      continue;
    }
    ep.push_back(slot.err_paper);
    ed.push_back(slot.err_derived);
    mw.push_back(slot.med_weight);
  }
  if (ep.empty()) throw std::runtime_error("calibrate: all trials failed");
  rep.median_err_paper = detail::median(ep);
  rep.median_err_derived = detail::median(ed);
  rep.median_weight = detail::median(mw);
  const double lo = std::min(rep.median_err_paper, rep.median_err_derived);
  const double hi = std::max(rep.median_err_paper, rep.median_err_derived);
  rep.consistent = rep.median_err_derived <= rep.median_err_paper ? "derived" : "paper";
  rep.separation = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();

  rep.checks.push_back(
      check_le("winner_error", lo, tolerances::calibration_good_max));
  rep.checks.push_back(
      check_ge("loser_vs_winner", rep.separation, tolerances::calibration_separation));
  rep.checks.push_back(check_le(
      "median_weight_rel_gap_vs_psi_inv_y",
      std::abs(rep.median_weight - rep.psi_inv_y) / rep.psi_inv_y,
      tolerances::weight_limit_rel));
  return rep;
}

}  // namespace robcov
