//! Step-weight sequences and the closed-form budgets derived from them.
//!
//! Both accelerated methods grow a weight sequence A_k = A_{k−1} + α_k where
//! α_k is the positive root of
//!
//!   (1 + μ_τ A_{k−1})(A_{k−1} + α_k) = L α_k².
//!
//! Everything else in this module is a consequence of that recurrence:
//! growth factors, partial-sum bounds, the worst-case iteration count
//! behind the stopping rule, admissible-noise budgets for three target
//! regimes, and the relative-noise thresholds used by the sweep harness.

use crate::config::TauMode;
use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Positive root of the defining quadratic, in the cancellation-free form
/// b/2 + sqrt(b²/4 + c) with b, c ≥ 0.
pub fn next_alpha(l: f64, mu_tau: f64, a_prev: f64) -> Result<f64> {
    require_positive("L", l)?;
    if !mu_tau.is_finite() || mu_tau < 0.0 {
        return Err(Error::config(format!("mu_tau must be >= 0, got {mu_tau}")));
    }
    if !a_prev.is_finite() || a_prev < 0.0 {
        return Err(Error::config(format!("A_prev must be >= 0, got {a_prev}")));
    }
    let m = 1.0 + mu_tau * a_prev;
    let half_b = m / (2.0 * l);
    let c = a_prev * m / l;
    Ok(half_b + (half_b * half_b + c).sqrt())
}

/// |(1 + μ_τA)(A + α) − Lα²|, the residual a correct root must zero out.
pub fn recurrence_residual(l: f64, mu_tau: f64, a_prev: f64, alpha: f64) -> f64 {
    ((1.0 + mu_tau * a_prev) * (a_prev + alpha) - l * alpha * alpha).abs()
}

/// Per-step growth factor λ = 1 + θ/2 + √θ, θ = μ_τ/L, with A_k ≥ λA_{k−1}.
/// `degenerate` marks μ_τ = 0, where the factor collapses to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFactor {
    pub lambda: f64,
    pub degenerate: bool,
}

pub fn growth_factor(l: f64, mu_tau: f64) -> Result<GrowthFactor> {
    require_positive("L", l)?;
    if !mu_tau.is_finite() || mu_tau < 0.0 {
        return Err(Error::config(format!("mu_tau must be >= 0, got {mu_tau}")));
    }
    if mu_tau == 0.0 {
        return Ok(GrowthFactor { lambda: 1.0, degenerate: true });
    }
    let theta = mu_tau / l;
    let lambda = 1.0 + theta / 2.0 + theta.sqrt();
    // λ ≥ e^{√θ/2} backs the exponential rate; holds for θ ≤ 1 and a fair
    // way beyond, and μ_τ ≤ μ ≤ L_f = L/2 keeps θ ≤ 1/2 for real configs.
    debug_assert!(lambda >= (theta.sqrt() / 2.0).exp() * (1.0 - 1e-12));
    Ok(GrowthFactor { lambda, degenerate: false })
}

/// Upper bound on (1/A_k)Σ_{j≤k}A_j: 1 + √(L/μ_τ) when μ_τ > 0, else k+1.
pub fn partial_sum_bound(l: f64, mu_tau: f64, k: usize) -> Result<f64> {
    require_positive("L", l)?;
    if !mu_tau.is_finite() || mu_tau < 0.0 {
        return Err(Error::config(format!("mu_tau must be >= 0, got {mu_tau}")));
    }
    if mu_tau > 0.0 {
        Ok(1.0 + (l / mu_tau).sqrt())
    } else {
        Ok((k + 1) as f64)
    }
}

/// Worst-case iteration count ⌈√(2LR²/ε)⌉ before the stopping rule must fire.
pub fn n_max(l: f64, r: f64, eps: f64) -> Result<u64> {
    require_positive("L", l)?;
    require_positive("eps", eps)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::config(format!("R must be >= 0, got {r}")));
    }
    Ok((2.0 * l * r * r / eps).sqrt().ceil() as u64)
}

/// Admissible noise and iteration budget for a strongly convex target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub delta_max: f64,
    pub iterations: u64,
}

/// Solves ((L+μ)/√(μ³L))(√2+1)δ² ≤ ε/2 for δ and pairs it with
/// N = ⌈2√(2L/μ)(ln(2LR²) + ln(1/ε))⌉, clamped to at least 1.
pub fn budget_strongly_convex(l: f64, mu: f64, r: f64, eps: f64) -> Result<Budget> {
    require_positive("L", l)?;
    require_positive("mu", mu)?;
    require_positive("R", r)?;
    require_positive("eps", eps)?;
    let delta_max = (eps * (mu.powi(3) * l).sqrt() / (2.0 * (SQRT2 + 1.0) * (l + mu))).sqrt();
    let log_sum = (2.0 * l * r * r).ln() + (1.0 / eps).ln();
    let raw = 2.0 * (2.0 * l / mu).sqrt() * log_sum;
    let iterations = if raw >= 1.0 { raw.ceil() as u64 } else { 1 };
    Ok(Budget { delta_max, iterations })
}

/// Budget for regularize-then-solve on a merely convex problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizedBudget {
    pub mu: f64,
    pub delta_max: f64,
    pub iterations: u64,
}

pub fn budget_regularized(l: f64, r: f64, eps: f64) -> Result<RegularizedBudget> {
    require_positive("L", l)?;
    require_positive("R", r)?;
    require_positive("eps", eps)?;
    let mu = 2.0 / 3.0 * eps / (r * r);
    let delta_max =
        (2.0_f64 / 243.0).powf(0.25) * (1.0 + (2.0 * l + 4.0).sqrt()).powf(-0.5) * r.powf(-1.5)
            * eps.powf(1.25);
    let raw = (12.0 * l + 24.0).sqrt() * r * (2.0 * l * r * r).ln()
        + 2.0 * (2.0 * l + 4.0).sqrt() / eps.sqrt() * (1.0 / eps).ln();
    let iterations = if raw >= 1.0 { raw.ceil() as u64 } else { 1 };
    Ok(RegularizedBudget { mu, delta_max, iterations })
}

/// Budget for driving a consistent linear system to residual ε₁ (function
/// gap target ε = ε₁²/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSystemBudget {
    pub c: f64,
    pub eps: f64,
    pub delta_max: f64,
    pub iterations: u64,
}

pub fn budget_linear_system(l: f64, r: f64, r_star: f64, eps1: f64) -> Result<LinearSystemBudget> {
    require_positive("L", l)?;
    require_positive("R", r)?;
    require_positive("R_star", r_star)?;
    require_positive("eps1", eps1)?;
    let eps = eps1 * eps1 / 2.0;
    let c = f64::min(l.powf(0.25) / (6.0 * (3.0 * r).sqrt()), 1.0 / (9.0 * r_star));
    let delta_max = c * eps;
    let iterations = (2.0 * (3.0 * l * r * r).sqrt() / eps1).round() as u64 + 1;
    Ok(LinearSystemBudget { c, eps, delta_max, iterations })
}

/// Largest relative-noise level with a proven linear rate for the
/// relative-noise method: μ₂/(7L) with μ₂ = μ/2.
pub fn stm2_alpha_threshold(l: f64, mu: f64) -> Result<f64> {
    require_positive("L", l)?;
    require_positive("mu", mu)?;
    Ok(mu / 2.0 / (7.0 * l))
}

/// Relative-noise threshold of the triple-momentum baseline:
/// (√χ + 1)/(4χ − 3√χ + 1) with χ = L/μ.
pub fn tmm_alpha_threshold(l: f64, mu: f64) -> Result<f64> {
    require_positive("L", l)?;
    require_positive("mu", mu)?;
    let chi = l / mu;
    let s = chi.sqrt();
    Ok((s + 1.0) / (4.0 * chi - 3.0 * s + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauComparison {
    pub preferred: TauMode,
    /// (1 + √(L/μ₁))δ₂ + 3R̃δ₁
    pub term_tau1: f64,
    /// (1 + √(L/μ₂))(δ₂ + δ₃)
    pub term_tau2: f64,
}

/// Compares the steady-state noise terms of the two models. R̃ is supplied
/// by the caller: the true trajectory radius is a run output, not an input.
pub fn compare_tau(delta: f64, l: f64, mu: f64, r_tilde: f64) -> Result<TauComparison> {
    require_positive("L", l)?;
    require_positive("mu", mu)?;
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::config(format!("delta must be >= 0, got {delta}")));
    }
    if !r_tilde.is_finite() || r_tilde < 0.0 {
        return Err(Error::config(format!("R_tilde must be >= 0, got {r_tilde}")));
    }
    let delta2 = delta * delta / l; // δ²/(2L_f) with L = 2L_f
    let delta3 = delta * delta / mu;
    let term_tau1 = (1.0 + (l / mu).sqrt()) * delta2 + 3.0 * r_tilde * delta;
    let term_tau2 = (1.0 + (l / (mu / 2.0)).sqrt()) * (delta2 + delta3);
    let preferred = if term_tau2 < term_tau1 { TauMode::Tau2 } else { TauMode::Tau1 };
    Ok(TauComparison { preferred, term_tau1, term_tau2 })
}

/// Runs the recurrence K steps from A₀ = 1/L and returns (α_k, A_k) pairs,
/// including the k = 0 entry α₀ = A₀ = 1/L.
pub fn weight_sequence(l: f64, mu_tau: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    let a0 = 1.0 / l;
    require_positive("L", l)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((a0, a0));
    let mut a = a0;
    for _ in 0..steps {
        let alpha = next_alpha(l, mu_tau, a)?;
        a += alpha;
        out.push((alpha, a));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Independent root oracle: bisection on g(α) = Lα² − (1+μA)(A+α).
    fn bisect_alpha(l: f64, mu_tau: f64, a_prev: f64) -> f64 {
        let g = |alpha: f64| l * alpha * alpha - (1.0 + mu_tau * a_prev) * (a_prev + alpha);
        let mut lo = 0.0;
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn alpha_frozen_values() {
        assert_abs_diff_eq!(next_alpha(1.0, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next_alpha(2.0, 0.0, 0.5).unwrap(), 0.809016994, epsilon = 1e-9);
        assert_abs_diff_eq!(
            next_alpha(1.0, 1.0, 1.0).unwrap(),
            1.0 + 3.0f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn alpha_matches_bisection_oracle() {
        for &(l, mu, a) in &[(1.0, 0.0, 0.0), (2.0, 0.0, 0.5), (1.0, 1.0, 1.0), (7.5, 0.3, 12.0)] {
            let alpha = next_alpha(l, mu, a).unwrap();
            assert_relative_eq!(alpha, bisect_alpha(l, mu, a), max_relative = 1e-12);
            let scale = l * alpha * alpha;
            assert!(recurrence_residual(l, mu, a, alpha) <= 1e-10 * scale);
        }
    }

    #[test]
    fn growth_factor_frozen_values() {
        assert_abs_diff_eq!(growth_factor(1.0, 0.25).unwrap().lambda, 1.625, epsilon = 1e-15);
        assert_abs_diff_eq!(growth_factor(1.0, 1.0).unwrap().lambda, 2.5, epsilon = 1e-15);
        let degenerate = growth_factor(4.0, 0.0).unwrap();
        assert_eq!(degenerate.lambda, 1.0);
        assert!(degenerate.degenerate);
    }

    #[test]
    fn growth_factor_dominates_exponential() {
        for &(l, mu) in &[(1.0, 0.25), (1.0, 1.0), (2.0, 0.01), (10.0, 5.0)] {
            let g = growth_factor(l, mu).unwrap();
            assert!(g.lambda >= ((mu / l).sqrt() / 2.0).exp());
        }
    }

    #[test]
    fn partial_sum_bound_frozen_values() {
        assert_eq!(partial_sum_bound(4.0, 1.0, 17).unwrap(), 3.0);
        assert_eq!(partial_sum_bound(9.0, 1.0, 10).unwrap(), 4.0);
        assert_eq!(partial_sum_bound(2.0, 0.0, 5).unwrap(), 6.0);
    }

    #[test]
    fn n_max_frozen_values() {
        assert_eq!(n_max(2.0, 1.0, 0.01).unwrap(), 20);
        assert_eq!(n_max(2.0, 1.0, 4.0).unwrap(), 1);
        assert_eq!(n_max(2.0, 1.0, 2.0).unwrap(), 2);
    }

    #[test]
    fn budget_strongly_convex_frozen_values() {
        let b = budget_strongly_convex(2.0, 0.5, 1.0, 0.01).unwrap();
        // independent arrangement: δ² · (L+μ)/√(μ³L) · (√2+1) must equal ε/2
        let lhs = b.delta_max * b.delta_max * (2.5 / 0.25f64.sqrt()) * (SQRT2 + 1.0);
        assert_relative_eq!(lhs, 0.005, max_relative = 1e-12);
        assert_abs_diff_eq!(b.delta_max, 0.02035223728176082, epsilon = 1e-12);
        assert_eq!(b.iterations, 34);
    }

    #[test]
    fn budget_strongly_convex_clamps_degenerate_log() {
        // ε = 2LR² makes the log sum exactly zero
        let b = budget_strongly_convex(2.0, 0.5, 1.0, 4.0).unwrap();
        assert_eq!(b.iterations, 1);
    }

    #[test]
    fn budget_strongly_convex_delta_homogeneity() {
        let b1 = budget_strongly_convex(2.0, 0.5, 1.0, 0.01).unwrap();
        let b4 = budget_strongly_convex(2.0, 0.5, 1.0, 0.04).unwrap();
        assert_relative_eq!(b4.delta_max, 2.0 * b1.delta_max, max_relative = 1e-12);
    }

    #[test]
    fn budget_regularized_frozen_values() {
        let b = budget_regularized(2.0, 1.0, 0.01).unwrap();
        assert_relative_eq!(b.mu, 2.0 / 300.0, max_relative = 1e-12);
        assert_abs_diff_eq!(b.delta_max, 4.868e-4, epsilon = 5e-7);
        let expected_raw = 48.0f64.sqrt() * 4.0f64.ln() + 2.0 * 8.0f64.sqrt() * 10.0 * 100.0f64.ln();
        assert_eq!(b.iterations, expected_raw.ceil() as u64);
        assert_eq!(b.iterations, 271);
    }

    #[test]
    fn budget_regularized_delta_homogeneity() {
        let b1 = budget_regularized(2.0, 1.0, 0.01).unwrap();
        let b16 = budget_regularized(2.0, 1.0, 0.16).unwrap();
        assert_relative_eq!(b16.delta_max, 32.0 * b1.delta_max, max_relative = 1e-12);
    }

    #[test]
    fn budget_linear_system_frozen_values() {
        // ε = 1 ⇔ ε₁ = √2
        let b = budget_linear_system(3.0, 1.0, 2.0, SQRT2).unwrap();
        assert_abs_diff_eq!(b.eps, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.c, 1.0 / 18.0, epsilon = 1e-12);
        let alt = 3.0f64.powf(0.25) / (6.0 * 3.0f64.sqrt());
        assert_abs_diff_eq!(alt, 0.12664, epsilon = 5e-6);
        let b2 = budget_linear_system(3.0, 1.0, 2.0, 0.3).unwrap();
        assert_eq!(b2.iterations, 21);
    }

    #[test]
    fn budget_linear_system_rstar_limit() {
        // tiny R⋆ pushes 1/(9R⋆) → ∞, so the min picks the L-branch
        let tight = budget_linear_system(3.0, 1.0, 1e-12, 0.3).unwrap();
        assert_relative_eq!(
            tight.c,
            3.0f64.powf(0.25) / (6.0 * 3.0f64.sqrt()),
            max_relative = 1e-12
        );
        // and a huge R⋆ drives the admissible noise to zero
        let loose = budget_linear_system(3.0, 1.0, 1e12, 0.3).unwrap();
        assert!(loose.c < 1e-11);
    }

    #[test]
    fn budget_monotone_in_eps() {
        // decreasing ε never decreases N and never increases δ_max
        let mut prev_n = 0u64;
        let mut prev_d = f64::INFINITY;
        for &eps in &[1.0, 0.5, 0.1, 0.01, 0.001] {
            let b = budget_strongly_convex(2.0, 0.5, 1.0, eps).unwrap();
            assert!(b.iterations >= prev_n);
            assert!(b.delta_max <= prev_d);
            prev_n = b.iterations;
            prev_d = b.delta_max;
        }
        let mut prev_n = 0u64;
        for &eps in &[1.0, 0.5, 0.1, 0.01] {
            assert!(n_max(2.0, 1.0, eps).unwrap() >= prev_n);
            prev_n = n_max(2.0, 1.0, eps).unwrap();
        }
    }

    #[test]
    fn stm2_threshold_frozen_values() {
        assert_relative_eq!(stm2_alpha_threshold(2.0, 0.2).unwrap(), 1.0 / 140.0, max_relative = 1e-12);
        let doubled = stm2_alpha_threshold(2.0, 0.4).unwrap();
        assert_relative_eq!(doubled, 2.0 / 140.0, max_relative = 1e-12);
    }

    #[test]
    fn tmm_threshold_frozen_values() {
        assert_relative_eq!(tmm_alpha_threshold(4.0, 1.0).unwrap(), 3.0 / 11.0, max_relative = 1e-12);
        assert_relative_eq!(tmm_alpha_threshold(1.0, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            tmm_alpha_threshold(100.0, 1.0).unwrap(),
            11.0 / 371.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn compare_tau_cases() {
        // δ = 0: tie, resolved to τ=1
        let tie = compare_tau(0.0, 2.0, 0.5, 1.0).unwrap();
        assert_eq!(tie.preferred, TauMode::Tau1);
        // tiny δ, large R̃: the 3R̃δ term dominates the quadratic τ=2 terms
        let tiny = compare_tau(1e-8, 2.0, 0.5, 1e3).unwrap();
        assert_eq!(tiny.preferred, TauMode::Tau2);
        // huge δ, small R̃: quadratic δ²/μ blows past the linear term
        let huge = compare_tau(1e3, 2.0, 0.5, 1e-6).unwrap();
        assert_eq!(huge.preferred, TauMode::Tau1);
    }

    #[test]
    fn weight_sequence_growth() {
        // A_k ≥ (k+1)²/(4L) for μ_τ = 0, from A₀ = 1/L
        for &l in &[0.5, 2.0, 8.0] {
            let seq = weight_sequence(l, 0.0, 200).unwrap();
            for (k, &(_, a)) in seq.iter().enumerate() {
                let lower = ((k + 1) * (k + 1)) as f64 / (4.0 * l);
                assert!(a >= lower * (1.0 - 1e-9), "A_{k} = {a} < {lower}");
            }
        }
    }
}
