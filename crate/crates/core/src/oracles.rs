//! Inexact gradient oracles.
//!
//! Two sources of inexactness are modelled: synthetic perturbation of the
//! exact gradient (absolute level δ or relative level α), and zeroth-order
//! estimation from function values (central differences and randomized
//! smoothing). Every random draw comes from an explicit 64-bit-seeded
//! stream (ChaCha8, fixed algorithm), so a seed fully determines a run on
//! any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec;
use crate::problem::SmoothProblem;
use crate::vector::Vector;

/// SplitMix64 finalizer; the standard 64-bit avalanche mix.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from (master seed, axis index, run
/// index); used for sweep parallelism so schedules cannot affect draws.
pub fn mix_seed(master: u64, axis: u64, run: u64) -> u64 {
    splitmix(splitmix(splitmix(master).wrapping_add(axis)).wrapping_add(run))
}

/// Deterministic random stream with a documented generator.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn derived(master: u64, axis: u64, run: u64) -> Self {
        RngStream::new(mix_seed(master, axis, run))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.gen::<f64>()
    }

    /// Vector of i.i.d. standard normals.
    pub fn normal_vector(&mut self, dim: usize) -> Vector {
        Vector::from_fn(dim, |_| self.standard_normal())
    }

    /// Uniform direction on the unit sphere (normalized standard normals).
    pub fn unit_sphere(&mut self, dim: usize) -> Vector {
        loop {
            let mut v = self.normal_vector(dim);
            let norm = v.norm();
            if norm > 1e-12 {
                v.scale(1.0 / norm);
                return v;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AbsoluteMode {
    /// Random direction of norm exactly δ.
    SphereUniform,
    /// A fixed bias vector with ‖v‖ ≤ δ; the deterministic adversary behind
    /// the gradient-descent noise-floor example.
    FixedBias(Vector),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelativeMode {
    /// Random direction of norm α‖∇f(x)‖.
    SphereUniform,
    /// Deterministic (1 − α)∇f(x).
    Shrink,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    None,
    Absolute { delta: f64, mode: AbsoluteMode },
    Relative { alpha: f64, mode: RelativeMode },
}

impl NoiseModel {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::Absolute { delta, mode } => {
                if !delta.is_finite() || *delta < 0.0 {
                    return Err(Error::config(format!("noise level delta must be >= 0, got {delta}")));
                }
                if let AbsoluteMode::FixedBias(v) = mode {
                    if v.len() != dim {
                        return Err(Error::Dimension { expected: dim, got: v.len() });
                    }
                    if v.norm() > *delta * (1.0 + 1e-12) {
                        return Err(Error::config(format!(
                            "bias norm {:.6e} exceeds delta {delta}",
                            v.norm()
                        )));
                    }
                }
                Ok(())
            }
            NoiseModel::Relative { alpha, .. } => {
                if !alpha.is_finite() || *alpha < 0.0 || *alpha >= 1.0 {
                    return Err(Error::config(format!("relative level alpha must be in [0, 1), got {alpha}")));
                }
                Ok(())
            }
        }
    }

    /// Absolute error bound δ when this model provides one.
    pub fn absolute_delta(&self) -> Option<f64> {
        match self {
            NoiseModel::None => Some(0.0),
            NoiseModel::Absolute { delta, .. } => Some(*delta),
            NoiseModel::Relative { .. } => None,
        }
    }

    /// Perturbs an exact gradient; returns (g̃, ‖g̃ − ∇f‖).
    pub fn perturb(&self, grad: &Vector, rng: &mut RngStream) -> (Vector, f64) {
        match self {
            NoiseModel::None => (grad.clone(), 0.0),
            NoiseModel::Absolute { delta, mode } => match mode {
                AbsoluteMode::SphereUniform => {
                    let direction = rng.unit_sphere(grad.len());
                    let mut out = grad.clone();
                    out.add_scaled(*delta, &direction);
                    (out, *delta * direction.norm())
                }
                AbsoluteMode::FixedBias(v) => {
                    let mut out = grad.clone();
                    out.add_scaled(1.0, v);
                    (out, v.norm())
                }
            },
            NoiseModel::Relative { alpha, mode } => match mode {
                RelativeMode::SphereUniform => {
                    // draw even at a stationary point so the stream position
                    // does not depend on the trajectory; the zero scale then
                    // returns exactly ∇f
                    let direction = rng.unit_sphere(grad.len());
                    let magnitude = *alpha * grad.norm();
                    let mut out = grad.clone();
                    out.add_scaled(magnitude, &direction);
                    (out, magnitude * direction.norm())
                }
                RelativeMode::Shrink => {
                    let mut out = grad.clone();
                    out.scale(1.0 - *alpha);
                    (out, *alpha * grad.norm())
                }
            },
        }
    }
}

/// Synthetic noise applied to the exact gradient of `problem` at `x`.
pub fn noisy_gradient(
    problem: &SmoothProblem,
    x: &Vector,
    model: &NoiseModel,
    rng: &mut RngStream,
) -> Result<(Vector, f64)> {
    model.validate(problem.dim())?;
    let grad = problem.gradient(x)?;
    Ok(model.perturb(&grad, rng))
}

/// Central finite differences: component i is (f(x+he_i) − f(x−he_i))/(2h).
/// Spends 2n value calls; exact on quadratics up to rounding.
pub fn central_fd_gradient<F>(value_oracle: F, x: &Vector, h: f64) -> Result<(Vector, u64)>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::config(format!("fd step must be > 0, got {h}")));
    }
    let n = x.len();
    for i in 0..n {
        if x[i] + h == x[i] || x[i] - h == x[i] {
            return Err(Error::StepTooSmall { h, index: i });
        }
    }
    let components = exec::map_indexed(n, |i| {
        let mut plus = x.clone();
        plus[i] += h;
        let mut minus = x.clone();
        minus[i] -= h;
        (value_oracle(&plus) - value_oracle(&minus)) / (2.0 * h)
    });
    Ok((Vector::new(components)?, 2 * n as u64))
}

fn smoothed_gradient<F>(
    value_oracle: F,
    x: &Vector,
    h: f64,
    directions: Vec<Vector>,
    pair_scale: f64,
) -> Result<(Vector, u64)>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    let samples = directions.len();
    // pairs are independent; evaluate in parallel, reduce in index order so
    // the result is schedule-invariant
    let contributions = exec::map_indexed(samples, |j| {
        let e = &directions[j];
        let mut plus = x.clone();
        plus.add_scaled(h, e);
        let mut minus = x.clone();
        minus.add_scaled(-h, e);
        let diff = value_oracle(&plus) - value_oracle(&minus);
        let mut term = e.clone();
        term.scale(pair_scale * diff);
        term
    });
    let mut mean = Vector::zeros(x.len());
    for term in &contributions {
        mean.add_scaled(1.0 / samples as f64, term);
    }
    Ok((mean, 2 * samples as u64))
}

/// Sphere-smoothing estimator: Monte-Carlo average of
/// (n/(2h))(f(x+he) − f(x−he))·e over uniform unit directions e. The
/// antithetic two-point form cancels the f(x) offset and is what the
/// expectation formula turns into once sampled.
pub fn sphere_smoothed_gradient<F>(
    value_oracle: F,
    x: &Vector,
    h: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<(Vector, u64)>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::config(format!("smoothing step must be > 0, got {h}")));
    }
    if samples == 0 {
        return Err(Error::config("smoothing needs at least one sample"));
    }
    let n = x.len();
    let directions: Vec<Vector> = (0..samples).map(|_| rng.unit_sphere(n)).collect();
    smoothed_gradient(value_oracle, x, h, directions, n as f64 / (2.0 * h))
}

/// Gaussian-smoothing estimator: Monte-Carlo average of
/// (1/(2h))(f(x+he) − f(x−he))·e over standard normal e.
pub fn gaussian_smoothed_gradient<F>(
    value_oracle: F,
    x: &Vector,
    h: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<(Vector, u64)>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::config(format!("smoothing step must be > 0, got {h}")));
    }
    if samples == 0 {
        return Err(Error::config("smoothing needs at least one sample"));
    }
    let directions: Vec<Vector> = (0..samples).map(|_| rng.normal_vector(x.len())).collect();
    smoothed_gradient(value_oracle, x, h, directions, 1.0 / (2.0 * h))
}

/// Worst-case absolute gradient error of `p`-th order differences with step
/// h and value error δ_f, with unit constants: δ(h) = √n(L_p hᵖ + δ_f/h),
/// minimized at h_opt = (δ_f/L_p)^{1/(p+1)}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdBudget {
    /// `None` means any h works: noiseless values make the bound vanish as
    /// h → 0 and no finite optimum exists.
    pub h_opt: Option<f64>,
    pub delta_bound: f64,
}

pub fn fd_error_budget(p: u8, l_p: f64, n: usize, delta_f: f64) -> Result<FdBudget> {
    if p != 1 && p != 2 {
        return Err(Error::config(format!("difference order p must be 1 or 2, got {p}")));
    }
    if !l_p.is_finite() || l_p <= 0.0 {
        return Err(Error::config(format!("L_p must be > 0, got {l_p}")));
    }
    if n == 0 {
        return Err(Error::config("dimension must be >= 1"));
    }
    if !delta_f.is_finite() || delta_f < 0.0 {
        return Err(Error::config(format!("value error must be >= 0, got {delta_f}")));
    }
    if delta_f == 0.0 {
        return Ok(FdBudget { h_opt: None, delta_bound: 0.0 });
    }
    let h_opt = (delta_f / l_p).powf(1.0 / (p as f64 + 1.0));
    let delta_bound = (n as f64).sqrt() * (l_p * h_opt.powi(p as i32) + delta_f / h_opt);
    Ok(FdBudget { h_opt: Some(h_opt), delta_bound })
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleKind {
    /// Exact gradient plus a synthetic noise model.
    Analytic(NoiseModel),
    /// Central finite differences on exact values.
    CentralFd { h: f64 },
    /// Sphere-smoothing Monte Carlo on exact values.
    SphereSmoothed { h: f64, samples: usize },
    /// Gaussian-smoothing Monte Carlo on exact values.
    GaussianSmoothed { h: f64, samples: usize },
}

/// What one oracle call returns: the exact value at the query point, the
/// inexact gradient, and the realized deviation from the exact gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutput {
    pub value: f64,
    pub grad: Vector,
    pub noise_norm: f64,
}

/// A stateful inexact-gradient source: one rng stream, call counters.
#[derive(Clone, Debug)]
pub struct GradientOracle {
    kind: OracleKind,
    rng: RngStream,
    grad_calls: u64,
    value_calls: u64,
}

impl GradientOracle {
    pub fn new(kind: OracleKind, seed: u64) -> Self {
        GradientOracle { kind, rng: RngStream::new(seed), grad_calls: 0, value_calls: 0 }
    }

    pub fn exact(seed: u64) -> Self {
        GradientOracle::new(OracleKind::Analytic(NoiseModel::None), seed)
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn noise_model(&self) -> Option<&NoiseModel> {
        match &self.kind {
            OracleKind::Analytic(model) => Some(model),
            _ => None,
        }
    }

    /// Absolute error level δ when the oracle certifies one (δ = 0 for the
    /// exact oracle; none for relative or zeroth-order kinds).
    pub fn absolute_delta(&self) -> Option<f64> {
        self.noise_model().and_then(NoiseModel::absolute_delta)
    }

    pub fn grad_calls(&self) -> u64 {
        self.grad_calls
    }

    pub fn value_calls(&self) -> u64 {
        self.value_calls
    }

    pub fn validate(&self, problem: &SmoothProblem) -> Result<()> {
        match &self.kind {
            OracleKind::Analytic(model) => model.validate(problem.dim()),
            OracleKind::CentralFd { h } | OracleKind::SphereSmoothed { h, .. } | OracleKind::GaussianSmoothed { h, .. } => {
                if !h.is_finite() || *h <= 0.0 {
                    return Err(Error::config(format!("oracle step must be > 0, got {h}")));
                }
                if let OracleKind::SphereSmoothed { samples, .. } | OracleKind::GaussianSmoothed { samples, .. } = &self.kind {
                    if *samples == 0 {
                        return Err(Error::config("smoothing needs at least one sample"));
                    }
                }
                Ok(())
            }
        }
    }

    /// One oracle call at `x`: exact value, inexact gradient, realized noise.
    pub fn call(&mut self, problem: &SmoothProblem, x: &Vector) -> Result<OracleOutput> {
        self.grad_calls += 1;
        match &self.kind {
            OracleKind::Analytic(model) => {
                let (value, grad) = problem.evaluate(x)?;
                let (grad, noise_norm) = model.perturb(&grad, &mut self.rng);
                Ok(OracleOutput { value, grad, noise_norm })
            }
            OracleKind::CentralFd { h } => {
                let (value, exact) = problem.evaluate(x)?;
                let (grad, calls) = central_fd_gradient(|p| (problem.eval_unchecked(p)).0, x, *h)?;
                self.value_calls += calls + 1;
                let noise_norm = grad.dist(&exact);
                Ok(OracleOutput { value, grad, noise_norm })
            }
            OracleKind::SphereSmoothed { h, samples } => {
                let (value, exact) = problem.evaluate(x)?;
                let (grad, calls) = sphere_smoothed_gradient(
                    |p| (problem.eval_unchecked(p)).0,
                    x,
                    *h,
                    *samples,
                    &mut self.rng,
                )?;
                self.value_calls += calls + 1;
                let noise_norm = grad.dist(&exact);
                Ok(OracleOutput { value, grad, noise_norm })
            }
            OracleKind::GaussianSmoothed { h, samples } => {
                let (value, exact) = problem.evaluate(x)?;
                let (grad, calls) = gaussian_smoothed_gradient(
                    |p| (problem.eval_unchecked(p)).0,
                    x,
                    *h,
                    *samples,
                    &mut self.rng,
                )?;
                self.value_calls += calls + 1;
                let noise_norm = grad.dist(&exact);
                Ok(OracleOutput { value, grad, noise_norm })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::diagonal_quadratic;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn none_model_is_identity() {
        let mut rng = RngStream::new(1);
        let grad = v(&[0.3, -0.4]);
        let (out, norm) = NoiseModel::None.perturb(&grad, &mut rng);
        assert_eq!(out, grad);
        assert_eq!(norm, 0.0);
    }

    #[test]
    fn fixed_bias_adds() {
        let mut rng = RngStream::new(1);
        let model = NoiseModel::Absolute {
            delta: 0.01,
            mode: AbsoluteMode::FixedBias(v(&[-0.01, 0.0])),
        };
        model.validate(2).unwrap();
        let (out, norm) = model.perturb(&v(&[0.03, 0.0]), &mut rng);
        assert_abs_diff_eq!(out[0], 0.02, epsilon = 1e-15);
        assert_eq!(out[1], 0.0);
        assert_abs_diff_eq!(norm, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn oversized_bias_rejected() {
        let model = NoiseModel::Absolute {
            delta: 0.005,
            mode: AbsoluteMode::FixedBias(v(&[-0.01, 0.0])),
        };
        assert!(model.validate(2).is_err());
    }

    #[test]
    fn shrink_scales_gradient() {
        let mut rng = RngStream::new(1);
        let model = NoiseModel::Relative { alpha: 0.5, mode: RelativeMode::Shrink };
        let (out, norm) = model.perturb(&v(&[1.0, 0.0]), &mut rng);
        assert_eq!(out.as_slice(), &[0.5, 0.0]);
        assert_eq!(norm, 0.5);
    }

    #[test]
    fn alpha_at_least_one_rejected() {
        let model = NoiseModel::Relative { alpha: 1.0, mode: RelativeMode::SphereUniform };
        assert!(model.validate(3).is_err());
    }

    #[test]
    fn absolute_sphere_norm_is_delta() {
        let mut rng = RngStream::new(42);
        let model = NoiseModel::Absolute { delta: 0.05, mode: AbsoluteMode::SphereUniform };
        for _ in 0..100 {
            let (out, norm) = model.perturb(&v(&[1.0, 2.0, 3.0]), &mut rng);
            assert_relative_eq!(norm, 0.05, max_relative = 1e-12);
            assert_relative_eq!(out.dist(&v(&[1.0, 2.0, 3.0])), 0.05, max_relative = 1e-12);
        }
    }

    #[test]
    fn relative_sphere_norm_tracks_gradient() {
        let mut rng = RngStream::new(42);
        let model = NoiseModel::Relative { alpha: 0.3, mode: RelativeMode::SphereUniform };
        let grad = v(&[3.0, 4.0]);
        for _ in 0..50 {
            let (_, norm) = model.perturb(&grad, &mut rng);
            assert_relative_eq!(norm, 0.3 * 5.0, max_relative = 1e-12);
        }
        // exactly zero at a stationary point
        let (out, norm) = model.perturb(&Vector::zeros(2), &mut rng);
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
        assert_eq!(norm, 0.0);
    }

    #[test]
    fn seed_determinism() {
        let grad = v(&[1.0, -1.0, 0.5]);
        let model = NoiseModel::Absolute { delta: 0.1, mode: AbsoluteMode::SphereUniform };
        let mut a = RngStream::new(7);
        let mut b = RngStream::new(7);
        for _ in 0..20 {
            assert_eq!(model.perturb(&grad, &mut a), model.perturb(&grad, &mut b));
        }
    }

    #[test]
    fn central_fd_on_quadratic() {
        // f(x) = x1^2 + 2 x2^2 at (1, 1), h = 0.1: exact on quadratics
        let f = |x: &Vector| x[0] * x[0] + 2.0 * x[1] * x[1];
        let (g, calls) = central_fd_gradient(f, &v(&[1.0, 1.0]), 0.1).unwrap();
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 4.0, epsilon = 1e-12);
        assert_eq!(calls, 4);
    }

    #[test]
    fn central_fd_on_constant_and_cubic() {
        let c = |_: &Vector| 3.5;
        let (g, _) = central_fd_gradient(c, &v(&[1.0, 2.0]), 0.1).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
        // f(x) = x^3 at 1 with h = 0.1: 3 + h^2
        let cubic = |x: &Vector| x[0] * x[0] * x[0];
        let (g, _) = central_fd_gradient(cubic, &v(&[1.0]), 0.1).unwrap();
        assert_abs_diff_eq!(g[0], 3.01, epsilon = 1e-12);
    }

    #[test]
    fn central_fd_step_underflow() {
        let f = |x: &Vector| x[0];
        let err = central_fd_gradient(f, &v(&[1e308]), 1e-300).unwrap_err();
        assert!(matches!(err, Error::StepTooSmall { .. }));
    }

    #[test]
    fn sphere_single_sample_by_hand() {
        // f(x) = x1, one antithetic pair with direction e: value n<c,e>e
        let f = |x: &Vector| x[0];
        let mut rng = RngStream::new(3);
        let (g, calls) = sphere_smoothed_gradient(f, &v(&[0.0, 0.0]), 0.5, 1, &mut rng).unwrap();
        // recover the drawn direction and check against the closed form
        let mut check = RngStream::new(3);
        let e = check.unit_sphere(2);
        assert_relative_eq!(g[0], 2.0 * e[0] * e[0], max_relative = 1e-12);
        assert_relative_eq!(g[1], 2.0 * e[0] * e[1], max_relative = 1e-12);
        assert_eq!(calls, 2);
    }

    #[test]
    fn smoothing_on_constant_is_zero() {
        let f = |_: &Vector| -7.0;
        let mut rng = RngStream::new(5);
        let (g, _) = sphere_smoothed_gradient(f, &v(&[1.0, 2.0]), 0.3, 32, &mut rng).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
        let (g, _) = gaussian_smoothed_gradient(f, &v(&[1.0, 2.0]), 0.3, 32, &mut rng).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn gaussian_quadratic_at_origin_is_zero() {
        // antithetic pair of ½‖x‖² at 0: f(he) − f(−he) = 0 exactly
        let f = |x: &Vector| 0.5 * x.norm_sq();
        let mut rng = RngStream::new(11);
        let (g, _) = gaussian_smoothed_gradient(f, &Vector::zeros(3), 0.2, 16, &mut rng).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn fd_budget_frozen_values() {
        let b = fd_error_budget(2, 1.0, 4, 1e-6).unwrap();
        assert_relative_eq!(b.h_opt.unwrap(), 0.01, max_relative = 1e-12);
        assert_relative_eq!(b.delta_bound, 4e-4, max_relative = 1e-12);
        // noiseless values: bound 0, h unconstrained
        let b0 = fd_error_budget(2, 1.0, 4, 0.0).unwrap();
        assert_eq!(b0.h_opt, None);
        assert_eq!(b0.delta_bound, 0.0);
        // δ_f × 8 with p = 2 scales the bound by 4
        let b8 = fd_error_budget(2, 1.0, 4, 8e-6).unwrap();
        assert_relative_eq!(b8.delta_bound, 4.0 * b.delta_bound, max_relative = 1e-12);
    }

    #[test]
    fn oracle_counts_calls() {
        let p = diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let mut oracle = GradientOracle::new(OracleKind::CentralFd { h: 1e-4 }, 0);
        let out = oracle.call(&p, &v(&[1.0, 1.0])).unwrap();
        assert_eq!(oracle.grad_calls(), 1);
        assert_eq!(oracle.value_calls(), 5); // 2n differences + the center value
        assert!(out.noise_norm < 1e-8);
    }

    #[test]
    fn mix_seed_disperses() {
        let a = mix_seed(42, 0, 0);
        let b = mix_seed(42, 0, 1);
        let c = mix_seed(42, 1, 0);
        let d = mix_seed(43, 0, 0);
        assert!(a != b && a != c && a != d && b != c);
    }
}
