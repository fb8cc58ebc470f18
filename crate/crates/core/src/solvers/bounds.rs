//! Convergence-rate right-hand sides, evaluated per iteration so runs can
//! be overlaid against what the theory promises.

use crate::error::{Error, Result};

/// Bound arrays indexed by iteration 0..=N. The τ curves exist only for
/// strongly convex problems (and τ=2 additionally needs δ₃); `mu0[0]` is
/// +∞ because the degenerate bound divides by N².
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCurve {
    pub tau1: Option<Vec<f64>>,
    pub tau2: Option<Vec<f64>>,
    pub mu0: Vec<f64>,
}

/// Evaluates the three displayed bounds for iterations 0..=N:
///
///   τ=1: LR²·exp(−(k/2)√(μ₁/L)) + (1+√(L/μ₁))δ₂ + 3R̃δ₁,  μ₁ = μ
///   τ=2: LR²·exp(−(k/2)√(μ₂/L)) + (1+√(L/μ₂))(δ₂+δ₃),    μ₂ = μ/2
///   μ=0: 4LR²/k² + 3R̃δ₁ + kδ₂
///
/// `r_tilde` is the trajectory-radius bound entering the δ₁ terms (equal to
/// R when δ = 0).
#[allow(clippy::too_many_arguments)]
pub fn theoretical_bounds(
    l: f64,
    mu: f64,
    r: f64,
    delta1: f64,
    delta2: f64,
    delta3: Option<f64>,
    r_tilde: f64,
    n: usize,
) -> Result<BoundCurve> {
    if !l.is_finite() || l <= 0.0 {
        return Err(Error::config(format!("L must be > 0, got {l}")));
    }
    if !mu.is_finite() || mu < 0.0 || mu > l {
        return Err(Error::config(format!("mu must be in [0, L], got {mu}")));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::config(format!("R must be > 0, got {r}")));
    }
    for (name, v) in [("delta1", delta1), ("delta2", delta2), ("r_tilde", r_tilde)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::config(format!("{name} must be >= 0, got {v}")));
        }
    }
    if let Some(d3) = delta3 {
        if !d3.is_finite() || d3 < 0.0 {
            return Err(Error::config(format!("delta3 must be >= 0, got {d3}")));
        }
    }

    let lr2 = l * r * r;
    let mu0 = (0..=n)
        .map(|k| {
            let decay = if k == 0 { f64::INFINITY } else { 4.0 * lr2 / ((k * k) as f64) };
            decay + 3.0 * r_tilde * delta1 + k as f64 * delta2
        })
        .collect();

    let exp_curve = |modulus: f64, offset: f64| -> Vec<f64> {
        let rate = 0.5 * (modulus / l).sqrt();
        (0..=n).map(|k| lr2 * (-(k as f64) * rate).exp() + offset).collect()
    };

    let tau1 = (mu > 0.0)
        .then(|| exp_curve(mu, (1.0 + (l / mu).sqrt()) * delta2 + 3.0 * r_tilde * delta1));
    let tau2 = match (mu > 0.0, delta3) {
        (true, Some(d3)) => {
            let mu2 = mu / 2.0;
            Some(exp_curve(mu2, (1.0 + (l / mu2).sqrt()) * (delta2 + d3)))
        }
        _ => None,
    };

    Ok(BoundCurve { tau1, tau2, mu0 })
}
