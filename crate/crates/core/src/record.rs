//! Per-iteration records and run traces.

use crate::config::{Algorithm, TauMode};
use crate::vector::Vector;

/// One row of a run trace. Quantities a method does not produce are `None`
/// and surface as empty CSV fields downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Exact objective value at the reported iterate x_k.
    pub f_x: f64,
    /// Exact gradient norm at x_k (instrumentation, not an oracle charge).
    pub grad_norm: f64,
    /// ‖x_k − x*‖ when the minimizer is known.
    pub dist_to_opt: Option<f64>,
    /// Cumulative step weight A_k (accelerated methods only).
    pub a_k: Option<f64>,
    /// Step weight α_k.
    pub alpha_k: Option<f64>,
    /// Realized ‖g̃ − ∇f‖ of this iteration's oracle call.
    pub noise_norm: f64,
    /// ψ_k(z_k), the minimum of the accumulated quadratic model (STM only).
    pub psi_min: Option<f64>,
    /// Running δ₁·Σ_{j≤k} α_j‖x̃_j − z_{j−1}‖, the online stopping term.
    pub adaptive_term: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AbortReason {
    /// A state component left the floating-point range.
    NonFinite { iter: usize, context: &'static str },
    /// The objective doubled over too many consecutive steps.
    Divergence { iter: usize },
}

/// Complete record of one solver run.
///
/// `records[k]` describes iteration k (k = 0 is the initialization step).
/// The running sums mirror the certificate terms: `sum_a[k] = Σ_{j≤k} A_j`
/// and `coupling_sum[k] = Σ_{1≤j≤k} α_j‖x̃_j − z_{j−1}‖` (STM only, without
/// the δ₁ factor so certificates can re-weight it).
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub tau: TauMode,
    pub records: Vec<IterRecord>,
    pub sum_a: Vec<f64>,
    pub coupling_sum: Vec<f64>,
    /// Running max distance of every produced iterate (x, z/u, x̃/y) to x*.
    pub r_tilde: Vec<f64>,
    /// STM2 only: f(y_k), the point the convergence theorem speaks about.
    pub f_y: Vec<f64>,
    pub f_star: Option<f64>,
    pub final_x: Vector,
    /// Oracle gradient calls charged by the algorithm.
    pub oracle_calls: u64,
    /// Underlying value evaluations (zeroth-order oracles only).
    pub value_calls: u64,
    /// Iteration at which the stopping rule fired, if configured and fired.
    pub stopped_at: Option<usize>,
    /// Global iteration indices at which a restart re-seeded the method.
    pub restarts: Vec<usize>,
    /// Restart made less than 1% gap progress over a full period.
    pub stalled: bool,
    pub abort: Option<AbortReason>,
}

impl Trace {
    pub fn new(algorithm: Algorithm, tau: TauMode, dim: usize) -> Self {
        Trace {
            algorithm,
            tau,
            records: Vec::new(),
            sum_a: Vec::new(),
            coupling_sum: Vec::new(),
            r_tilde: Vec::new(),
            f_y: Vec::new(),
            f_star: None,
            final_x: Vector::zeros(dim),
            oracle_calls: 0,
            value_calls: 0,
            stopped_at: None,
            restarts: Vec::new(),
            stalled: false,
            abort: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    /// f(x_k) − f* per iteration, when the optimum is known.
    pub fn gaps(&self) -> Option<Vec<f64>> {
        let f_star = self.f_star?;
        Some(self.records.iter().map(|r| r.f_x - f_star).collect())
    }
}
