//! The similar-triangles method under absolute gradient inexactness.
//!
//! One projection per step; the estimating sequence
//! ψ_k(x) = (c_ψ/2)‖x‖² − ⟨b, x⟩ + c₀ is carried as its three coefficients,
//! so the constrained arg-min is project(b/c_ψ) and ψ_k(z_k) is O(n) to
//! evaluate — which is exactly what the per-iteration certificate
//! A_k f(x_k) ≤ ψ_k(z_k) + noise sums needs.

use crate::config::{Algorithm, SolverConfig, StoppingConfig, StoppingVariant, TauMode};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::oracles::GradientOracle;
use crate::problem::SmoothProblem;
use crate::record::{AbortReason, IterRecord, Trace};
use crate::sequences::next_alpha;
use crate::vector::Vector;

/// Everything one iteration produced, in the open: the runner keeps the
/// parts it records, invariant checks read the rest.
#[derive(Clone, Debug)]
pub struct StmStep {
    pub iter: usize,
    pub alpha: f64,
    /// A_k after this step.
    pub a: f64,
    /// A_{k−1}; zero for the initialization step.
    pub a_prev: f64,
    pub x_prev: Vector,
    pub z_prev: Vector,
    pub x_tilde: Vector,
    /// Inexact gradient at x̃_k.
    pub grad_tilde: Vector,
    /// Exact f(x̃_k).
    pub f_tilde: f64,
    pub noise_norm: f64,
    pub z: Vector,
    pub x: Vector,
    /// Exact f(x_k).
    pub f_x: f64,
    /// Exact ‖∇f(x_k)‖.
    pub exact_grad_norm: f64,
    /// ψ_k(z_k).
    pub psi_min: f64,
    /// ψ_{k−1}(z_{k−1}); absent at initialization.
    pub psi_prev_min: Option<f64>,
    /// α_k‖x̃_k − z_{k−1}‖, the new term of the adaptive sum.
    pub coupling_increment: f64,
}

/// Step-level state of Algorithm 1. `init` performs iteration 0 (the first
/// oracle call at x̃₀ = x_start already moves the iterate), `step` performs
/// one iteration k ≥ 1.
#[derive(Clone, Debug)]
pub struct StmSolver {
    l: f64,
    mu_tau: f64,
    set: FeasibleSet,
    k: usize,
    a: f64,
    x: Vector,
    z: Vector,
    psi_c: f64,
    psi_b: Vector,
    psi_c0: f64,
    psi_min: f64,
    coupling_sum: f64,
    sum_a: f64,
}

impl StmSolver {
    pub fn init(
        problem: &SmoothProblem,
        oracle: &mut GradientOracle,
        config: &SolverConfig,
        x_start: &Vector,
    ) -> Result<(StmSolver, StmStep)> {
        let l = config.l;
        let mu_tau = config.mu_tau();
        let alpha0 = 1.0 / l;
        let x_tilde = x_start.clone();
        let out = oracle.call(problem, &x_tilde)?;

        let psi_c = 1.0 + mu_tau * alpha0;
        // ψ₀(x) = ½‖x − x̃₀‖² + α₀(f(x̃₀) + ⟨g̃₀, x − x̃₀⟩ + (μ_τ/2)‖x − x̃₀‖²)
        let mut psi_b = x_tilde.clone();
        psi_b.add_scaled(alpha0 * mu_tau, &x_tilde);
        psi_b.add_scaled(-alpha0, &out.grad);
        let psi_c0 = 0.5 * x_tilde.norm_sq()
            + alpha0
                * (out.value - out.grad.dot(&x_tilde) + 0.5 * mu_tau * x_tilde.norm_sq());

        let z = self::argmin_quadratic(&config.feasible, &psi_b, psi_c);
        let x = z.clone();
        let psi_min = self::quadratic_value(&config.feasible, &psi_b, psi_c, psi_c0, &z);
        let (f_x, exact_grad) = problem.evaluate(&x)?;

        let solver = StmSolver {
            l,
            mu_tau,
            set: config.feasible.clone(),
            k: 0,
            a: alpha0,
            x: x.clone(),
            z: z.clone(),
            psi_c,
            psi_b,
            psi_c0,
            psi_min,
            coupling_sum: 0.0,
            sum_a: alpha0,
        };
        let step = StmStep {
            iter: 0,
            alpha: alpha0,
            a: alpha0,
            a_prev: 0.0,
            x_prev: x_tilde.clone(),
            z_prev: x_tilde.clone(),
            x_tilde,
            grad_tilde: out.grad,
            f_tilde: out.value,
            noise_norm: out.noise_norm,
            z,
            x,
            f_x,
            exact_grad_norm: exact_grad.norm(),
            psi_min,
            psi_prev_min: None,
            coupling_increment: 0.0,
        };
        Ok((solver, step))
    }

    pub fn step(&mut self, problem: &SmoothProblem, oracle: &mut GradientOracle) -> Result<StmStep> {
        let a_prev = self.a;
        let alpha = next_alpha(self.l, self.mu_tau, a_prev)?;
        let a = a_prev + alpha;

        let mut x_tilde = Vector::zeros(self.x.len());
        x_tilde.add_scaled(a_prev / a, &self.x);
        x_tilde.add_scaled(alpha / a, &self.z);

        let out = oracle.call(problem, &x_tilde)?;
        let coupling_increment = alpha * x_tilde.dist(&self.z);

        // ψ_k = ψ_{k−1} + α_k(f(x̃_k) + ⟨g̃_k, x − x̃_k⟩ + (μ_τ/2)‖x − x̃_k‖²)
        self.psi_c = 1.0 + self.mu_tau * a;
        self.psi_b.add_scaled(alpha * self.mu_tau, &x_tilde);
        self.psi_b.add_scaled(-alpha, &out.grad);
        self.psi_c0 += alpha
            * (out.value - out.grad.dot(&x_tilde) + 0.5 * self.mu_tau * x_tilde.norm_sq());

        let z = self::argmin_quadratic(&self.set, &self.psi_b, self.psi_c);
        let mut x = Vector::zeros(self.x.len());
        x.add_scaled(a_prev / a, &self.x);
        x.add_scaled(alpha / a, &z);

        let psi_prev_min = self.psi_min;
        let psi_min = self::quadratic_value(&self.set, &self.psi_b, self.psi_c, self.psi_c0, &z);
        let (f_x, exact_grad) = problem.evaluate(&x)?;

        let step = StmStep {
            iter: self.k + 1,
            alpha,
            a,
            a_prev,
            x_prev: std::mem::replace(&mut self.x, x.clone()),
            z_prev: std::mem::replace(&mut self.z, z.clone()),
            x_tilde,
            grad_tilde: out.grad,
            f_tilde: out.value,
            noise_norm: out.noise_norm,
            z,
            x,
            f_x,
            exact_grad_norm: exact_grad.norm(),
            psi_min,
            psi_prev_min: Some(psi_prev_min),
            coupling_increment,
        };
        self.k += 1;
        self.a = a;
        self.psi_min = psi_min;
        self.coupling_sum += coupling_increment;
        self.sum_a += a;
        Ok(step)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sum_a(&self) -> f64 {
        self.sum_a
    }

    pub fn coupling_sum(&self) -> f64 {
        self.coupling_sum
    }
}

fn argmin_quadratic(set: &FeasibleSet, b: &Vector, c: f64) -> Vector {
    let mut unconstrained = b.clone();
    unconstrained.scale(1.0 / c);
    set.project(&unconstrained)
}

fn quadratic_value(set: &FeasibleSet, b: &Vector, c: f64, c0: f64, z: &Vector) -> f64 {
    if set.is_whole_space() {
        // value at the unconstrained minimum b/c
        c0 - b.norm_sq() / (2.0 * c)
    } else {
        0.5 * c * z.norm_sq() - b.dot(z) + c0
    }
}

/// What happened at the end of one restart segment.
#[derive(Debug)]
pub(crate) struct SegmentEnd {
    pub steps_taken: usize,
    pub last_x: Vector,
    pub last_gap: Option<f64>,
    pub fired: bool,
    pub halved: bool,
    pub aborted: bool,
}

/// Appends one record to the trace and updates the running arrays; shared
/// between plain runs and restarted segments.
fn push_record(
    trace: &mut Trace,
    problem: &SmoothProblem,
    delta1: Option<f64>,
    iter: usize,
    step: &StmStep,
    coupling_sum: f64,
    sum_a: f64,
) {
    let dist_to_opt = problem.x_star().map(|s| s.dist(&step.x));
    trace.records.push(IterRecord {
        iter,
        f_x: step.f_x,
        grad_norm: step.exact_grad_norm,
        dist_to_opt,
        a_k: Some(step.a),
        alpha_k: Some(step.alpha),
        noise_norm: step.noise_norm,
        psi_min: Some(step.psi_min),
        adaptive_term: delta1.map(|d| d * coupling_sum),
    });
    trace.sum_a.push(sum_a);
    trace.coupling_sum.push(coupling_sum);
    if let Some(star) = problem.x_star() {
        let mut r = trace.r_tilde.last().copied().unwrap_or(0.0);
        for point in [&step.x_tilde, &step.z, &step.x] {
            r = r.max(star.dist(point));
        }
        trace.r_tilde.push(r);
    }
    trace.oracle_calls += 1;
}

fn non_finite_in_step(step: &StmStep) -> bool {
    !(step.x.is_finite() && step.z.is_finite() && step.psi_min.is_finite() && step.f_x.is_finite())
}

/// Runs STM for up to `budget` steps beyond the segment's initialization,
/// appending records with global indices starting at `start_iter`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stm_segment(
    problem: &SmoothProblem,
    oracle: &mut GradientOracle,
    config: &SolverConfig,
    x_start: &Vector,
    start_iter: usize,
    budget: usize,
    halving_target: Option<f64>,
    trace: &mut Trace,
) -> Result<SegmentEnd> {
    let delta1 = oracle.absolute_delta();
    let f_star = problem.f_star();

    let (mut solver, init) = match StmSolver::init(problem, oracle, config, x_start) {
        Ok(pair) => pair,
        Err(Error::NonFinite { context, .. }) => {
            trace.abort = Some(AbortReason::NonFinite { iter: start_iter, context });
            return Ok(SegmentEnd {
                steps_taken: 0,
                last_x: x_start.clone(),
                last_gap: None,
                fired: false,
                halved: false,
                aborted: true,
            });
        }
        Err(e) => return Err(e),
    };
    if non_finite_in_step(&init) {
        trace.abort = Some(AbortReason::NonFinite { iter: start_iter, context: "stm state" });
        return Ok(SegmentEnd {
            steps_taken: 0,
            last_x: x_start.clone(),
            last_gap: None,
            fired: false,
            halved: false,
            aborted: true,
        });
    }
    push_record(trace, problem, delta1, start_iter, &init, 0.0, solver.sum_a());

    let mut last = init;
    let mut fired = false;
    let mut halved = false;
    let check_stop = |step: &StmStep, solver: &StmSolver, cfg: &Option<StoppingConfig>| -> bool {
        match cfg {
            Some(stopping) => stopping_check(
                &StoppingState {
                    f_x: step.f_x,
                    a_n: step.a,
                    sum_a: solver.sum_a(),
                    coupling_sum: solver.coupling_sum(),
                },
                stopping,
            ),
            None => false,
        }
    };
    let halving_hit = |step: &StmStep| -> bool {
        match (halving_target, f_star) {
            (Some(target), Some(fs)) => step.f_x - fs <= target,
            _ => false,
        }
    };

    if check_stop(&last, &solver, &config.stopping) {
        fired = true;
    }

    let mut steps_taken = 0;
    while steps_taken < budget && !fired && !halved {
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
                context: "stm state",
            });
            break;
        }
        steps_taken += 1;
        push_record(
            trace,
            problem,
            delta1,
            start_iter + steps_taken,
            &step,
            solver.coupling_sum(),
            solver.sum_a(),
        );
        if check_stop(&step, &solver, &config.stopping) {
            fired = true;
        }
        if halving_hit(&step) {
            halved = true;
        }
        last = step;
    }

    Ok(SegmentEnd {
        steps_taken,
        last_gap: f_star.map(|fs| last.f_x - fs),
        last_x: last.x,
        fired,
        halved,
        aborted: trace.abort.is_some(),
    })
}

fn validate_run(problem: &SmoothProblem, oracle: &GradientOracle, config: &SolverConfig) -> Result<()> {
    config.validate(problem.dim())?;
    oracle.validate(problem)?;
    // the recurrence constant must dominate 2·L_f; passing raw L_f here is
    // the classic way to lose the certificate
    if config.l < 2.0 * problem.l_f() * (1.0 - 1e-9) {
        return Err(Error::config(format!(
            "method constant L = {} is below 2·L_f = {}",
            config.l,
            2.0 * problem.l_f()
        )));
    }
    Ok(())
}

/// Algorithm 1 for `config.iterations` steps (records 0..=N), or until the
/// configured stopping rule fires. Numeric blowup aborts the run but
/// returns the partial trace with the abort flagged.
pub fn stm_run(
    problem: &SmoothProblem,
    oracle: &mut GradientOracle,
    config: &SolverConfig,
) -> Result<Trace> {
    validate_run(problem, oracle, config)?;
    let value_calls_before = oracle.value_calls();
    let mut trace = Trace::new(Algorithm::Stm, config.tau, problem.dim());
    trace.f_star = problem.f_star();
    let end = stm_segment(
        problem,
        oracle,
        config,
        &config.x_start,
        0,
        config.iterations,
        None,
        &mut trace,
    )?;
    if end.fired {
        trace.stopped_at = trace.records.last().map(|r| r.iter);
    }
    trace.final_x = end.last_x;
    trace.value_calls = oracle.value_calls() - value_calls_before;
    Ok(trace)
}

/// Inputs the stopping rule reads at iteration N.
#[derive(Clone, Copy, Debug)]
pub struct StoppingState {
    /// Exact f(x_N).
    pub f_x: f64,
    /// A_N.
    pub a_n: f64,
    /// Σ_{j≤N} A_j.
    pub sum_a: f64,
    /// Σ_{j≤N} α_j‖x̃_j − z_{j−1}‖ without the δ₁ weight.
    pub coupling_sum: f64,
}

/// First-iteration-such-that test: fires when the optimality gap drops to
/// the theorem's right-hand side (inclusive).
pub fn stopping_check(state: &StoppingState, cfg: &StoppingConfig) -> bool {
    let noise_term = match cfg.variant {
        StoppingVariant::Theorem => 3.0 * cfg.radius * cfg.delta1,
        StoppingVariant::Adaptive => cfg.radius * cfg.delta1 + cfg.delta1 * state.coupling_sum,
    };
    let rhs = (cfg.delta2 / state.a_n) * state.sum_a + noise_term + cfg.epsilon;
    state.f_x - cfg.f_star <= rhs
}

/// Outcome of a per-iteration certificate sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub ok: bool,
    pub per_iteration: Vec<bool>,
    pub first_failure: Option<usize>,
    /// max over iterations of (lhs − rhs)/scale; ≤ slack when ok.
    pub worst_slack: f64,
}

impl CertificateReport {
    fn from_slacks(slacks: Vec<f64>, tolerance: f64) -> CertificateReport {
        let per_iteration: Vec<bool> = slacks.iter().map(|s| *s <= tolerance).collect();
        let first_failure = per_iteration.iter().position(|ok| !ok);
        CertificateReport {
            ok: first_failure.is_none(),
            worst_slack: slacks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            per_iteration,
            first_failure,
        }
    }
}

const CERTIFICATE_SLACK: f64 = 1e-8;

/// Checks A_k f(x_k) ≤ ψ_k(z_k) + δ₂Σ_{j≤k}A_j + (τ=1: δ₁Σα_j‖x̃_j−z_{j−1}‖;
/// τ=2: δ₃Σ_{j<k}A_j) at every recorded iteration, with 1e−8 relative slack.
pub fn stm_certificate(
    trace: &Trace,
    delta1: f64,
    delta2: f64,
    delta3: Option<f64>,
) -> Result<CertificateReport> {
    if trace.algorithm != Algorithm::Stm {
        return Err(Error::config(format!(
            "certificate applies to stm traces, got {}",
            trace.algorithm.name()
        )));
    }
    if !trace.restarts.is_empty() {
        return Err(Error::Unavailable(
            "certificate does not span restarted runs; check each segment separately".into(),
        ));
    }
    if trace.records.is_empty() {
        return Err(Error::Unavailable("empty trace".into()));
    }
    if delta1 < 0.0 || delta2 < 0.0 || delta3.is_some_and(|d| d < 0.0) {
        return Err(Error::config("certificate noise constants must be >= 0"));
    }
    let delta3 = match (trace.tau, delta3) {
        (TauMode::Tau1, _) => 0.0,
        (TauMode::Tau2, Some(d)) => d,
        (TauMode::Tau2, None) => {
            return Err(Error::config("tau = 2 certificate requires delta3"));
        }
    };
    let mut slacks = Vec::with_capacity(trace.records.len());
    for (k, record) in trace.records.iter().enumerate() {
        let (a_k, psi_min) = match (record.a_k, record.psi_min) {
            (Some(a), Some(p)) => (a, p),
            _ => return Err(Error::Unavailable("trace lacks psi/A values".into())),
        };
        let lhs = a_k * record.f_x;
        let noise_term = match trace.tau {
            TauMode::Tau1 => delta1 * trace.coupling_sum[k],
            TauMode::Tau2 => delta3 * (trace.sum_a[k] - a_k),
        };
        let rhs = psi_min + delta2 * trace.sum_a[k] + noise_term;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        slacks.push((lhs - rhs) / scale);
    }
    Ok(CertificateReport::from_slacks(slacks, CERTIFICATE_SLACK))
}
