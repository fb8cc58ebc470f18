//! Plain gradient descent — the baseline whose error floor δ²/(2μ)
//! motivates everything else here.

use crate::config::{Algorithm, SolverConfig, TauMode};
use crate::error::{Error, Result};
use crate::oracles::GradientOracle;
use crate::problem::SmoothProblem;
use crate::record::{AbortReason, IterRecord, Trace};
use crate::vector::Vector;

const DOUBLINGS_BEFORE_ABORT: u32 = 10;

/// Tracks "f doubled again" streaks against the best reference level seen.
pub(crate) struct DivergenceMonitor {
    reference: f64,
    prev_excess: Option<f64>,
    streak: u32,
}

impl DivergenceMonitor {
    pub fn new(f_star: Option<f64>, f_first: f64) -> Self {
        DivergenceMonitor {
            reference: f_star.unwrap_or(f_first),
            prev_excess: None,
            streak: 0,
        }
    }

    /// Returns true when the objective has doubled 10 times in a row.
    pub fn observe(&mut self, f: f64) -> bool {
        self.reference = self.reference.min(f);
        let excess = f - self.reference;
        if let Some(prev) = self.prev_excess {
            if prev > 0.0 && excess > 2.0 * prev {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.prev_excess = Some(excess);
        self.streak >= DOUBLINGS_BEFORE_ABORT
    }
}

pub(crate) fn push_record(trace: &mut Trace, problem: &SmoothProblem, iter: usize, x: &Vector, f_x: f64, grad_norm: f64, noise_norm: f64) {
    trace.records.push(IterRecord {
        iter,
        f_x,
        grad_norm,
        dist_to_opt: problem.x_star().map(|s| s.dist(x)),
        a_k: None,
        alpha_k: None,
        noise_norm,
        psi_min: None,
        adaptive_term: None,
    });
    if let Some(star) = problem.x_star() {
        let r = trace.r_tilde.last().copied().unwrap_or(0.0);
        trace.r_tilde.push(r.max(star.dist(x)));
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn gd_segment(
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
    let h = config.gd_step.unwrap_or(2.0 / config.l);
    let f_star = problem.f_star();
    let mut x = x_start.clone();
    let (mut f_x, grad0) = problem.evaluate(&x)?;
    if start_iter == 0 {
        push_record(trace, problem, 0, &x, f_x, grad0.norm(), 0.0);
    }
    let mut monitor = DivergenceMonitor::new(f_star, f_x);
    monitor.observe(f_x);

    let mut halved = false;
    let mut steps_taken = 0;
    while steps_taken < budget && !halved {
        let iter = start_iter + steps_taken + 1;
        let out = match oracle.call(problem, &x) {
            Ok(out) => out,
            Err(Error::NonFinite { context, .. }) => {
                trace.abort = Some(AbortReason::NonFinite { iter, context });
                break;
            }
            Err(e) => return Err(e),
        };
        x.add_scaled(-h, &out.grad);
        let (f_new, exact_grad) = match problem.evaluate(&x) {
            Ok(pair) => pair,
            Err(Error::NonFinite { context, .. }) => {
                trace.abort = Some(AbortReason::NonFinite { iter, context });
                break;
            }
            Err(e) => return Err(e),
        };
        f_x = f_new;
        steps_taken += 1;
        trace.oracle_calls += 1;
        push_record(trace, problem, iter, &x, f_x, exact_grad.norm(), out.noise_norm);
        if monitor.observe(f_x) {
            trace.abort = Some(AbortReason::Divergence { iter });
            break;
        }
        if let (Some(target), Some(fs)) = (halving_target, f_star) {
            if f_x - fs <= target {
                halved = true;
            }
        }
    }
    Ok(SegmentEnd {
        steps_taken,
        last_gap: f_star.map(|fs| f_x - fs),
        last_x: x,
        fired: false,
        halved,
        aborted: trace.abort.is_some(),
    })
}

/// x_k = x_{k−1} − h·g̃(x_{k−1}) with h defaulting to 1/L_f. Whole-space
/// only; ten consecutive objective doublings abort the run with the partial
/// trace kept.
pub fn gd_run(
    problem: &SmoothProblem,
    oracle: &mut GradientOracle,
    config: &SolverConfig,
) -> Result<Trace> {
    config.validate(problem.dim())?;
    oracle.validate(problem)?;
    if !config.feasible.is_whole_space() {
        return Err(Error::config("gd baseline supports only the whole space"));
    }
    let value_calls_before = oracle.value_calls();
    let mut trace = Trace::new(Algorithm::Gd, TauMode::Tau1, problem.dim());
    trace.f_star = problem.f_star();
    let end = gd_segment(
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
