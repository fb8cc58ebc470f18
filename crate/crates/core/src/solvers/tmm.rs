//! Triple-momentum baseline: the fastest known globally convergent
//! first-order method on smooth strongly convex functions. External
//! reference point for the noise-threshold sweeps; parameterized by
//! ρ = 1 − 1/√κ in the standard form.

use crate::config::{Algorithm, SolverConfig, TauMode};
use crate::error::{Error, Result};
use crate::oracles::GradientOracle;
use crate::problem::SmoothProblem;
use crate::record::{AbortReason, Trace};
use crate::vector::Vector;

use super::gd::{push_record, DivergenceMonitor};

struct TmmParams {
    step: f64,
    beta: f64,
    gamma: f64,
    d: f64,
}

fn tmm_params(l_f: f64, mu: f64) -> TmmParams {
    let kappa = l_f / mu;
    let rho = 1.0 - 1.0 / kappa.sqrt();
    TmmParams {
        step: (1.0 + rho) / l_f,
        beta: rho * rho / (2.0 - rho),
        gamma: rho * rho / ((1.0 + rho) * (2.0 - rho)),
        d: rho * rho / (1.0 - rho * rho).max(f64::MIN_POSITIVE),
    }
}

fn combine(a: &Vector, b: &Vector, weight: f64) -> Vector {
    // (1 + w)·a − w·b
    let mut out = a.clone();
    out.scale(1.0 + weight);
    out.add_scaled(-weight, b);
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn tmm_segment(
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
    let params = tmm_params(config.l_f(), config.mu);
    let f_star = problem.f_star();
    let mut xi_prev = x_start.clone();
    let mut xi = x_start.clone();

    // local iteration k spends its oracle call at y_k = (1+γ)ξ_k − γξ_{k−1}
    // and reports x_k = (1+d)ξ_k − dξ_{k−1}; record k carries the noise of
    // that call.  k = 0 reports x_start and is recorded only at the head of
    // a run, but its call still drives ξ₁.
    let mut x = x_start.clone();
    let (mut f_x, grad0) = problem.evaluate(&x)?;
    let mut monitor = DivergenceMonitor::new(f_star, f_x);
    monitor.observe(f_x);

    let mut halved = false;
    let mut steps_taken = 0;
    for local in 0..=budget {
        let iter = start_iter + local;
        let y = combine(&xi, &xi_prev, params.gamma);
        let out = match oracle.call(problem, &y) {
            Ok(out) => out,
            Err(Error::NonFinite { context, .. }) => {
                trace.abort = Some(AbortReason::NonFinite { iter, context });
                break;
            }
            Err(e) => return Err(e),
        };
        trace.oracle_calls += 1;
        if local > 0 {
            x = combine(&xi, &xi_prev, params.d);
            let (f_new, exact_grad) = match problem.evaluate(&x) {
                Ok(pair) => pair,
                Err(Error::NonFinite { context, .. }) => {
                    trace.abort = Some(AbortReason::NonFinite { iter, context });
                    break;
                }
                Err(e) => return Err(e),
            };
            f_x = f_new;
            steps_taken = local;
            push_record(trace, problem, iter, &x, f_x, exact_grad.norm(), out.noise_norm);
            if monitor.observe(f_x) {
                trace.abort = Some(AbortReason::Divergence { iter });
                break;
            }
            if let (Some(target), Some(fs)) = (halving_target, f_star) {
                if f_x - fs <= target {
                    halved = true;
                    break;
                }
            }
        } else if start_iter == 0 {
            push_record(trace, problem, 0, &x, f_x, grad0.norm(), out.noise_norm);
        }
        if local == budget {
            break;
        }
        let mut xi_next = combine(&xi, &xi_prev, params.beta);
        xi_next.add_scaled(-params.step, &out.grad);
        xi_prev = std::mem::replace(&mut xi, xi_next);
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

/// Triple momentum for `config.iterations` steps; strongly convex problems
/// on the whole space only.
pub fn tmm_run(
    problem: &SmoothProblem,
    oracle: &mut GradientOracle,
    config: &SolverConfig,
) -> Result<Trace> {
    config.validate(problem.dim())?;
    oracle.validate(problem)?;
    if config.mu <= 0.0 {
        return Err(Error::config("triple momentum requires mu > 0"));
    }
    if !config.feasible.is_whole_space() {
        return Err(Error::config("triple momentum supports only the whole space"));
    }
    let value_calls_before = oracle.value_calls();
    let mut trace = Trace::new(Algorithm::Tmm, TauMode::Tau1, problem.dim());
    trace.f_star = problem.f_star();
    let end = tmm_segment(
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
