#pragma once

// Named thresholds used by the experiment-level checks and the acceptance
// suite.  Statistical bounds were calibrated from pilot runs over at least
// five master seeds and sit at >= 3x the observed spread; exact-identity
// bounds reflect solver tolerances.

namespace robcov::tolerances {

// fixed-point solves
inline constexpr double fixed_point_rel_residual = 1e-9;
inline constexpr double tyler_trace = 1e-12;
inline constexpr double init_independence = 1e-8;

// equivariance (relative operator norm)
inline constexpr double tyler_scale_invariance = 1e-6;
inline constexpr double affine_equivariance = 1e-6;

// operator-norm convergence sweep at y = 0.2
inline constexpr double sweep_slope_lo = -0.65;
inline constexpr double sweep_slope_hi = -0.35;
// design target for the weight sup-error at n=2000; pilot runs put the
// statistic at 0.30 +- 0.03 (max over 2000 samples, amplified by 1/(1-y)
// through the fixed-point feedback), so the harness enforces the envelope
// on its own runs while the acceptance suite reports against the target
inline constexpr double tyler_weight_sup_n2000 = 0.25;
inline constexpr double tyler_weight_sup_envelope = 0.40;

// largest eigenvalue vs (1 + sqrt(y))^2
inline constexpr double largest_eig_abs = 0.15;

// empirical spectral distributions
inline constexpr double ks_vs_mp = 0.05;
inline constexpr double ks_vs_generalized = 0.07;
inline constexpr double rescale_ks_shift = 1e-8;

// spiked-model correlations (100 reps, n=200, p=20)
inline constexpr double spike_tyler_mean_min = 0.85;
inline constexpr double spike_sample_mean_max = 0.30;

// reference laws
inline constexpr double mp_mass_abs = 1e-6;
inline constexpr double stieltjes_vs_closed_form = 1e-10;

// scaling-convention calibration
inline constexpr double calibration_good_max = 0.1;
inline constexpr double calibration_separation = 3.0;
inline constexpr double weight_limit_rel = 0.10;

// quadratic-form concentration diagnostics at n=2000, p=400
inline constexpr double quad_form_max_dev = 0.25;
inline constexpr double hessian_row_sum_max = 2.0;

// runtime budgets (seconds)
inline constexpr double runtime_fixed_point = 10.0;
inline constexpr double runtime_spike = 120.0;

}  // namespace robcov::tolerances
