//! The methods and their certificates.
//!
//! Submodules hold one algorithm each (similar triangles, its relative-noise
//! variant, gradient descent, triple momentum) plus the convergence-bound
//! curves and the restart wrapper. This module owns the one transformation
//! shared by all of them: regularization of a degenerate objective.

pub mod bounds;
pub mod gd;
pub mod restart;
pub mod stm;
pub mod stm2;
pub mod tmm;

pub use bounds::{theoretical_bounds, BoundCurve};
pub use gd::gd_run;
pub use restart::restart_run;
pub use stm::{stm_certificate, stm_run, stopping_check, CertificateReport, StmSolver, StmStep, StoppingState};
pub use stm2::{stm2_certificate, stm2_run, Stm2CertificateReport, Stm2Solver, Stm2Step};
pub use tmm::tmm_run;

use crate::error::{Error, Result};
use crate::problem::SmoothProblem;
use crate::vector::Vector;

/// A degenerate problem made strongly convex by a proximal term around a
/// center point.
#[derive(Clone, Debug)]
pub struct Regularized {
    /// f(x) + (μ/2)‖x − center‖² with μ = (2/3)ε/R², reported with the
    /// tight constants L_f + μ and μ.
    pub problem: SmoothProblem,
    pub mu: f64,
    /// The coarser smoothness constant 2·L_f, valid whenever μ ≤ L_f;
    /// exposed for budget formulas that use it.
    pub coarse_l_f: f64,
}

/// Adds (μ/2)‖x − center‖² with μ = (2/3)ε/R² to a merely convex problem,
/// making the strongly convex machinery applicable at ε/3 extra error. The
/// minimizer of the original problem is deliberately not carried over.
pub fn regularize(problem: &SmoothProblem, center: &Vector, epsilon: f64, radius: f64) -> Result<Regularized> {
    if problem.mu() > 0.0 {
        return Err(Error::config(format!(
            "regularization targets mu = 0 problems; this one has mu = {}",
            problem.mu()
        )));
    }
    if center.len() != problem.dim() {
        return Err(Error::Dimension { expected: problem.dim(), got: center.len() });
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::config(format!("radius must be > 0, got {radius}")));
    }
    let mu = (2.0 / 3.0) * epsilon / (radius * radius);
    let inner = problem.clone();
    let center_owned = center.clone();
    let eval = move |x: &Vector| {
        let (f, mut g) = inner.eval_unchecked(x);
        let mut dx = x.clone();
        dx.add_scaled(-1.0, &center_owned);
        g.add_scaled(mu, &dx);
        (f + 0.5 * mu * dx.norm_sq(), g)
    };
    let reg = SmoothProblem::new(
        format!("{}+reg(mu={mu:.6e})", problem.name()),
        problem.dim(),
        problem.l_f() + mu,
        mu,
        std::sync::Arc::new(eval),
    )?;
    Ok(Regularized { problem: reg, mu, coarse_l_f: 2.0 * problem.l_f() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{diagonal_quadratic, nesterov_degenerate};
    use crate::oracles::{NoiseModel, AbsoluteMode, RngStream};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn regularize_frozen_values() {
        // ε = 0.6, R = 1 → μ = 0.4; the second coordinate behaves like
        // f(x) = ½x², so ∇f^μ at 1 there must be 1.4
        let p = diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let reg = regularize(&p, &Vector::zeros(2), 0.6, 1.0).unwrap();
        assert_abs_diff_eq!(reg.mu, 0.4, epsilon = 1e-15);
        let g = reg.problem.gradient(&Vector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(g[1], 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(reg.problem.l_f(), 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(reg.coarse_l_f, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn regularize_vanishes_with_epsilon() {
        let p = nesterov_degenerate(4, 2, 2.0).unwrap();
        let reg = regularize(&p, &Vector::zeros(4), 0.0, 1.0).unwrap();
        assert_eq!(reg.mu, 0.0);
        let x = Vector::new(vec![0.3, -0.1, 0.2, 0.0]).unwrap();
        assert_eq!(reg.problem.gradient(&x).unwrap(), p.gradient(&x).unwrap());
        assert_eq!(reg.problem.value(&x).unwrap(), p.value(&x).unwrap());
    }

    #[test]
    fn regularize_rejects_strongly_convex_input() {
        let p = diagonal_quadratic(&[0.5, 1.0]).unwrap();
        assert!(regularize(&p, &Vector::zeros(2), 0.1, 1.0).is_err());
    }

    #[test]
    fn noise_passes_through_regularization_unchanged() {
        // ‖∇̃f^μ − ∇f^μ‖ = ‖∇̃f − ∇f‖: the perturbation is additive
        let p = nesterov_degenerate(4, 2, 2.0).unwrap();
        let reg = regularize(&p, &Vector::zeros(4), 0.3, 1.0).unwrap();
        let model = NoiseModel::Absolute { delta: 0.05, mode: AbsoluteMode::SphereUniform };
        let x = Vector::new(vec![0.1, 0.2, -0.3, 0.4]).unwrap();
        let grad = reg.problem.gradient(&x).unwrap();
        let mut rng = RngStream::new(9);
        for _ in 0..10 {
            let (noisy, norm) = model.perturb(&grad, &mut rng);
            assert_relative_eq!(noisy.dist(&grad), norm, max_relative = 1e-12);
            assert_relative_eq!(norm, 0.05, max_relative = 1e-12);
        }
    }
}
