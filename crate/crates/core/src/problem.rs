//! Smooth objectives and the derived inexactness constants.
//!
//! A problem couples an objective with the constants the methods consume: a
//! gradient Lipschitz constant `l_f`, a strong-convexity modulus `mu` (0 for
//! merely convex), and optional optimum metadata. Value and gradient come
//! from a single evaluation call so noisy and zeroth-order oracles can
//! charge one oracle call per point.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::Vector;

type EvalFn = dyn Fn(&Vector) -> (f64, Vector) + Send + Sync;

#[derive(Clone)]
pub struct SmoothProblem {
    name: String,
    dim: usize,
    l_f: f64,
    mu: f64,
    x_star: Option<Vector>,
    f_star: Option<f64>,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for SmoothProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("l_f", &self.l_f)
            .field("mu", &self.mu)
            .finish()
    }
}

impl SmoothProblem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        l_f: f64,
        mu: f64,
        eval: Arc<EvalFn>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("problem dimension must be >= 1"));
        }
        if !l_f.is_finite() || l_f <= 0.0 {
            return Err(Error::config(format!("smoothness constant must be positive, got {l_f}")));
        }
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::config(format!("strong convexity must be >= 0, got {mu}")));
        }
        if mu > l_f * (1.0 + 1e-12) {
            return Err(Error::config(format!("strong convexity {mu} exceeds smoothness {l_f}")));
        }
        Ok(SmoothProblem { name: name.into(), dim, l_f, mu, x_star: None, f_star: None, eval })
    }

    /// Attaches the known minimizer; checks stationarity before accepting it.
    pub fn with_optimum(mut self, x_star: Vector, f_star: f64) -> Result<Self> {
        if x_star.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x_star.len() });
        }
        let (_, grad) = self.evaluate(&x_star)?;
        let tol = 1e-8 * f64::max(1.0, self.l_f * x_star.norm());
        if grad.norm() > tol {
            return Err(Error::config(format!(
                "claimed minimizer is not stationary: |grad| = {:.3e} > {:.3e}",
                grad.norm(),
                tol
            )));
        }
        self.x_star = Some(x_star);
        self.f_star = Some(f_star);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn l_f(&self) -> f64 {
        self.l_f
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x_star(&self) -> Option<&Vector> {
        self.x_star.as_ref()
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    /// f(x) and the exact gradient from one call.
    pub fn evaluate(&self, x: &Vector) -> Result<(f64, Vector)> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        let (value, grad) = (self.eval)(x);
        if !value.is_finite() {
            return Err(Error::NonFinite { context: "objective value", index: 0 });
        }
        if let Some(index) = grad.first_non_finite() {
            return Err(Error::NonFinite { context: "gradient component", index });
        }
        Ok((value, grad))
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.evaluate(x)?.0)
    }

    /// Raw evaluation without validation; for hot inner loops (finite
    /// differences, smoothing) where the call site guarantees the dimension.
    pub fn eval_unchecked(&self, x: &Vector) -> (f64, Vector) {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        Ok(self.evaluate(x)?.1)
    }

    /// ‖x0 − x*‖ when the minimizer is known.
    pub fn radius_from(&self, x0: &Vector) -> Option<f64> {
        self.x_star.as_ref().map(|s| s.dist(x0))
    }
}

pub fn evaluate(problem: &SmoothProblem, x: &Vector) -> Result<(f64, Vector)> {
    problem.evaluate(x)
}

/// Per-model error constants derived from an absolute gradient-error level δ.
///
/// δ₁ bounds the linear error term of the τ=1 lower model, δ₂ the constant
/// term of the doubled-smoothness upper model, and δ₃ (strongly convex case
/// only) the constant term of the halved-μ lower model. Absence is explicit:
/// μ = 0 problems never fabricate δ₃.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InexactnessConstants {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: Option<f64>,
    pub delta_model1: Option<f64>,
}

pub fn inexactness_constants(delta: f64, l_f: f64, mu: f64) -> Result<InexactnessConstants> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::config(format!("noise level must be >= 0, got {delta}")));
    }
    if !l_f.is_finite() || l_f <= 0.0 {
        return Err(Error::config(format!("smoothness constant must be positive, got {l_f}")));
    }
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::config(format!("strong convexity must be >= 0, got {mu}")));
    }
    let delta1 = delta;
    let delta2 = delta * delta / (2.0 * l_f);
    let (delta3, delta_model1) = if mu > 0.0 {
        let d3 = delta * delta / mu;
        (Some(d3), Some(delta * delta / (4.0 * l_f) + d3))
    } else {
        (None, None)
    };
    Ok(InexactnessConstants { delta1, delta2, delta3, delta_model1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_quadratic() -> SmoothProblem {
        // f(x) = x^2/2
        SmoothProblem::new("half-square", 1, 1.0, 1.0, Arc::new(|x: &Vector| {
            (0.5 * x[0] * x[0], Vector::new(vec![x[0]]).unwrap())
        }))
        .unwrap()
    }

    #[test]
    fn evaluate_scalar_quadratic() {
        let p = scalar_quadratic();
        let (v, g) = p.evaluate(&Vector::new(vec![2.0]).unwrap()).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(g.as_slice(), &[2.0]);
    }

    #[test]
    fn evaluate_diagonal_quadratic() {
        // f(x) = (0.1 x1^2 + x2^2)/2
        let p = SmoothProblem::new("diag", 2, 1.0, 0.1, Arc::new(|x: &Vector| {
            (
                0.5 * (0.1 * x[0] * x[0] + x[1] * x[1]),
                Vector::new(vec![0.1 * x[0], x[1]]).unwrap(),
            )
        }))
        .unwrap();
        let (v, g) = p.evaluate(&Vector::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(v, 0.55, epsilon = 1e-15);
        assert_eq!(g.as_slice(), &[0.1, 1.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = scalar_quadratic();
        assert!(matches!(
            p.evaluate(&Vector::new(vec![1.0, 2.0]).unwrap()),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn bogus_minimizer_rejected() {
        let p = scalar_quadratic();
        assert!(p.with_optimum(Vector::new(vec![1.0]).unwrap(), 0.5).is_err());
    }

    #[test]
    fn constants_with_strong_convexity() {
        let c = inexactness_constants(0.1, 1.0, 0.5).unwrap();
        assert_eq!(c.delta1, 0.1);
        assert_abs_diff_eq!(c.delta2, 0.005, epsilon = 1e-15);
        assert_abs_diff_eq!(c.delta3.unwrap(), 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(c.delta_model1.unwrap(), 0.0225, epsilon = 1e-15);
    }

    #[test]
    fn constants_without_strong_convexity() {
        let c = inexactness_constants(0.2, 2.0, 0.0).unwrap();
        assert_eq!(c.delta1, 0.2);
        assert_abs_diff_eq!(c.delta2, 0.01, epsilon = 1e-15);
        assert!(c.delta3.is_none());
        assert!(c.delta_model1.is_none());
    }

    #[test]
    fn constants_no_noise() {
        let c = inexactness_constants(0.0, 3.0, 1.0).unwrap();
        assert_eq!(c.delta1, 0.0);
        assert_eq!(c.delta2, 0.0);
        assert_eq!(c.delta3, Some(0.0));
    }
}
