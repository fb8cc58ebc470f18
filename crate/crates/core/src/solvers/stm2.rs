//! The similar-triangles variant analyzed under relative gradient noise
//! ‖g̃ − ∇f‖ ≤ α‖∇f‖. Same three-point geometry as Algorithm 1 but driven
//! by the halved modulus μ₂ = μ/2 and a different estimating sequence φ_k
//! whose arg-min u_k admits the closed one-line update below.

use crate::config::{Algorithm, SolverConfig, TauMode};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::oracles::GradientOracle;
use crate::problem::SmoothProblem;
use crate::record::{AbortReason, IterRecord, Trace};
use crate::sequences::{next_alpha, stm2_alpha_threshold};
use crate::vector::Vector;

/// One iteration of Algorithm 2, fully disclosed for invariant checks.
#[derive(Clone, Debug)]
pub struct Stm2Step {
    pub iter: usize,
    pub alpha: f64,
    pub a: f64,
    pub a_prev: f64,
    pub x_prev: Vector,
    pub u_prev: Vector,
    pub y: Vector,
    /// Inexact gradient at y_k; zero vector at the (call-free) start record.
    pub grad_y: Vector,
    /// Exact f(y_k).
    pub f_y: f64,
    pub noise_norm: f64,
    pub u: Vector,
    /// Arg-min of the accumulated φ_k; equals `u` on the whole space.
    pub u_from_accumulator: Vector,
    pub x: Vector,
    pub f_x: f64,
    pub exact_grad_norm: f64,
    /// φ_k(u_k).
    pub phi_min: f64,
}

#[derive(Clone, Debug)]
pub struct Stm2Solver {
    l: f64,
    mu2: f64,
    set: FeasibleSet,
    k: usize,
    a: f64,
    x: Vector,
    u: Vector,
    phi_b: Vector,
    phi_c: f64,
    phi_c0: f64,
    sum_a: f64,
}

impl Stm2Solver {
    /// Iteration 0 makes no oracle call: x₀ = y₀ = u₀ = x_start.
    pub fn init(problem: &SmoothProblem, config: &SolverConfig, x_start: &Vector) -> Result<(Stm2Solver, Stm2Step)> {
        let l = config.l;
        let mu2 = config.mu / 2.0;
        let a0 = 1.0 / l;
        let c = 1.0 + mu2 * a0;
        // φ₀(u) = ((1+μ₂A₀)/2)‖u − u₀‖², the form the update telescopes from
        let mut phi_b = x_start.clone();
        phi_b.scale(c);
        let phi_c0 = 0.5 * c * x_start.norm_sq();
        let (f_x, exact_grad) = problem.evaluate(x_start)?;
        let solver = Stm2Solver {
            l,
            mu2,
            set: config.feasible.clone(),
            k: 0,
            a: a0,
            x: x_start.clone(),
            u: x_start.clone(),
            phi_b,
            phi_c: c,
            phi_c0,
            sum_a: a0,
        };
        let step = Stm2Step {
            iter: 0,
            alpha: a0,
            a: a0,
            a_prev: 0.0,
            x_prev: x_start.clone(),
            u_prev: x_start.clone(),
            y: x_start.clone(),
            grad_y: Vector::zeros(x_start.len()),
            f_y: f_x,
            noise_norm: 0.0,
            u: x_start.clone(),
            u_from_accumulator: x_start.clone(),
            x: x_start.clone(),
            f_x,
            exact_grad_norm: exact_grad.norm(),
            phi_min: 0.0,
        };
        Ok((solver, step))
    }

    pub fn step(&mut self, problem: &SmoothProblem, oracle: &mut GradientOracle) -> Result<Stm2Step> {
        let a_prev = self.a;
        let alpha = next_alpha(self.l, self.mu2, a_prev)?;
        let a = a_prev + alpha;

        let mut y = Vector::zeros(self.x.len());
        y.add_scaled(a_prev / a, &self.x);
        y.add_scaled(alpha / a, &self.u);

        let out = oracle.call(problem, &y)?;

        // u_k = proj( ((1+μ₂A_{k−1})u_{k−1} + μ₂α_k y_k − α_k g̃)/(1+μ₂A_k) )
        let c_prev = 1.0 + self.mu2 * a_prev;
        let c = 1.0 + self.mu2 * a;
        let mut u_raw = Vector::zeros(self.x.len());
        u_raw.add_scaled(c_prev / c, &self.u);
        u_raw.add_scaled(self.mu2 * alpha / c, &y);
        u_raw.add_scaled(-alpha / c, &out.grad);
        let u = self.set.project(&u_raw);

        let mut x = Vector::zeros(self.x.len());
        x.add_scaled(a_prev / a, &self.x);
        x.add_scaled(alpha / a, &u);

        // φ accumulator mirrors the recursion on the whole space
        self.phi_b.add_scaled(alpha * self.mu2, &y);
        self.phi_b.add_scaled(-alpha, &out.grad);
        self.phi_c = c;
        self.phi_c0 +=
            alpha * (out.value - out.grad.dot(&y) + 0.5 * self.mu2 * y.norm_sq());
        let mut u_from_accumulator = self.phi_b.clone();
        u_from_accumulator.scale(1.0 / c);
        u_from_accumulator = self.set.project(&u_from_accumulator);
        let phi_min = 0.5 * c * u.norm_sq() - self.phi_b.dot(&u) + self.phi_c0;

        let (f_x, exact_grad) = problem.evaluate(&x)?;
        let step = Stm2Step {
            iter: self.k + 1,
            alpha,
            a,
            a_prev,
            x_prev: std::mem::replace(&mut self.x, x.clone()),
            u_prev: std::mem::replace(&mut self.u, u.clone()),
            y,
            grad_y: out.grad,
            f_y: out.value,
            noise_norm: out.noise_norm,
            u,
            u_from_accumulator,
            x,
            f_x,
            exact_grad_norm: exact_grad.norm(),
            phi_min,
        };
        self.k += 1;
        self.a = a;
        self.sum_a += a;
        Ok(step)
    }
}

fn push_record(trace: &mut Trace, problem: &SmoothProblem, iter: usize, step: &Stm2Step, sum_a: f64) {
    trace.records.push(IterRecord {
        iter,
        f_x: step.f_x,
        grad_norm: step.exact_grad_norm,
        dist_to_opt: problem.x_star().map(|s| s.dist(&step.x)),
        a_k: Some(step.a),
        alpha_k: Some(step.alpha),
        noise_norm: step.noise_norm,
        psi_min: Some(step.phi_min),
        adaptive_term: None,
    });
    trace.sum_a.push(sum_a);
    trace.f_y.push(step.f_y);
    if let Some(star) = problem.x_star() {
        let mut r = trace.r_tilde.last().copied().unwrap_or(0.0);
        for point in [&step.y, &step.u, &step.x] {
            r = r.max(star.dist(point));
        }
        trace.r_tilde.push(r);
    }
}

fn non_finite_in_step(step: &Stm2Step) -> bool {
    !(step.x.is_finite() && step.u.is_finite() && step.f_x.is_finite() && step.phi_min.is_finite())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn stm2_segment(
    problem: &SmoothProblem,
    oracle: &mut GradientOracle,
    config: &SolverConfig,
    x_start: &Vector,
    start_iter: usize,
    budget: usize,
    halving_target: Option<f64>,
    trace: &mut Trace,
) -> Result<super::stm::SegmentEnd> {
    use super::stm::SegmentEnd;
    let f_star = problem.f_star();
    let (mut solver, init) = Stm2Solver::init(problem, config, x_start)?;
    if start_iter == 0 {
        push_record(trace, problem, 0, &init, solver.sum_a);
    }
    let mut last = init;
    let mut halved = false;
    let mut steps_taken = 0;
    while steps_taken < budget && !halved {
        let step = match solver.step(problem, oracle) {
            Ok(step) => step,
            Err(Error::NonFinite { context, .. }) => {
                trace.abort =
                    Some(AbortReason::NonFinite { iter: start_iter + steps_taken + 1, context });
                break;
            }
            Err(e) => return Err(e),
        };
        if non_finite_in_step(&step) {
            trace.abort = Some(AbortReason::NonFinite {
                iter: start_iter + steps_taken + 1,
                context: "stm2 state",
            });
            break;
        }
        steps_taken += 1;
        trace.oracle_calls += 1;
        push_record(trace, problem, start_iter + steps_taken, &step, solver.sum_a);
        if let (Some(target), Some(fs)) = (halving_target, f_star) {
            if step.f_x - fs <= target {
                halved = true;
            }
        }
        last = step;
    }
    Ok(SegmentEnd {
        steps_taken,
        last_gap: f_star.map(|fs| last.f_x - fs),
        last_x: last.x,
        fired: false,
        halved,
        aborted: trace.abort.is_some(),
    })
}

/// Algorithm 2 for `config.iterations` steps. Requires μ > 0; the stopping
/// rule (an Algorithm-1 result) is not consulted.
pub fn stm2_run(
    problem: &SmoothProblem,
    oracle: &mut GradientOracle,
    config: &SolverConfig,
) -> Result<Trace> {
    config.validate(problem.dim())?;
    oracle.validate(problem)?;
    if config.mu <= 0.0 {
        return Err(Error::config("stm2 requires mu > 0 (it runs on mu2 = mu/2)"));
    }
    if config.l < 2.0 * problem.l_f() * (1.0 - 1e-9) {
        return Err(Error::config(format!(
            "method constant L = {} is below 2·L_f = {}",
            config.l,
            2.0 * problem.l_f()
        )));
    }
    let value_calls_before = oracle.value_calls();
    let mut trace = Trace::new(Algorithm::Stm2, TauMode::Tau2, problem.dim());
    trace.f_star = problem.f_star();
    let end = stm2_segment(
        problem,
        oracle,
        config,
        &config.x_start,
        0,
        config.iterations,
        None,
        &mut trace,
    )?;
    trace.final_x = end.last_x;
    trace.value_calls = oracle.value_calls() - value_calls_before;
    Ok(trace)
}

/// Certificate outcome for Algorithm 2: the Claim inequality always, the
/// Theorem bound additionally when α is at or below its threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Stm2CertificateReport {
    pub ok: bool,
    /// Claim: Δ_k ≤ ((1+θ)^{k−1}/A_k)(λ + θA₀Δ₀), k ≥ 1.
    pub claim: Vec<bool>,
    /// Theorem: Δ_k ≤ (5LR²/4 + (15/196)√(2L/μ)Δ₀)·exp(−(k/4)√(μ/(2L))),
    /// present iff α ≤ μ₂/(7L).
    pub theorem: Option<Vec<bool>>,
    pub first_failure: Option<usize>,
    pub lambda: f64,
    pub theta: f64,
    pub alpha_threshold: f64,
}

const STM2_SLACK: f64 = 1e-10;

pub fn stm2_certificate(
    trace: &Trace,
    l: f64,
    mu: f64,
    r: f64,
    alpha: f64,
    f0_gap: f64,
) -> Result<Stm2CertificateReport> {
    if trace.algorithm != Algorithm::Stm2 {
        return Err(Error::config(format!(
            "certificate applies to stm2 traces, got {}",
            trace.algorithm.name()
        )));
    }
    if trace.f_star.is_none() {
        return Err(Error::Unavailable("stm2 certificate needs f_star".into()));
    }
    if !trace.restarts.is_empty() {
        return Err(Error::Unavailable("certificate does not span restarted runs".into()));
    }
    if trace.f_y.len() != trace.records.len() || trace.records.is_empty() {
        return Err(Error::Unavailable("trace lacks f(y_k) values".into()));
    }
    if mu <= 0.0 || l <= 0.0 || r <= 0.0 || alpha < 0.0 || !f0_gap.is_finite() {
        return Err(Error::config("stm2 certificate needs L > 0, mu > 0, R > 0, alpha >= 0"));
    }
    let f_star = trace.f_star.unwrap();
    let mu2 = mu / 2.0;
    let lambda = 1.25 * r * r * (l / mu2).sqrt();
    let theta = 3.75 * alpha * alpha * (l / mu2).powf(1.5);
    let a0 = trace.records[0]
        .a_k
        .ok_or_else(|| Error::Unavailable("trace lacks A_k values".into()))?;
    let threshold = stm2_alpha_threshold(l, mu)?;

    let n = trace.records.len();
    let mut claim = vec![true; n];
    let theorem_applies = alpha <= threshold;
    let mut theorem = vec![true; n];
    let theorem_scale = 1.25 * l * r * r + (15.0 / 196.0) * (2.0 * l / mu).sqrt() * f0_gap;
    let theorem_rate = 0.25 * (mu / (2.0 * l)).sqrt();

    for k in 1..n {
        let a_k = trace.records[k]
            .a_k
            .ok_or_else(|| Error::Unavailable("trace lacks A_k values".into()))?;
        let gap = trace.f_y[k] - f_star;
        let growth = (1.0 + theta).powi(k as i32 - 1);
        let claim_rhs = (growth / a_k) * (lambda + theta * a0 * f0_gap);
        claim[k] = gap <= claim_rhs + STM2_SLACK * claim_rhs.abs().max(gap.abs()).max(1.0);
        if theorem_applies {
            let bound = theorem_scale * (-(k as f64) * theorem_rate).exp();
            theorem[k] = gap <= bound + STM2_SLACK * bound.abs().max(gap.abs()).max(1.0);
        }
    }

    let theorem = theorem_applies.then_some(theorem);
    let per_iter_ok = |k: usize| claim[k] && theorem.as_ref().is_none_or(|t| t[k]);
    let first_failure = (0..n).find(|k| !per_iter_ok(*k));
    Ok(Stm2CertificateReport {
        ok: first_failure.is_none(),
        claim,
        theorem,
        first_failure,
        lambda,
        theta,
        alpha_threshold: threshold,
    })
}
