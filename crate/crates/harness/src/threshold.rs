//! Empirical relative-noise threshold α*: the largest α at which a run
//! still reaches, at a fixed probe horizon, a gap within `factor` of the
//! noiseless one. One noise realization gives one α*, so the search is
//! repeated over derived seeds and reported as a min/median/max spread
//! rather than a single number.

use noisy_stm_core::exec;
use noisy_stm_core::oracles::{mix_seed, OracleKind};
use noisy_stm_core::{Error, NoiseModel};

use crate::config::{Assembled, ExperimentConfig, SweepParameter};
use crate::experiment::run_once;
use crate::{HarnessError, Result};

/// Seed-derivation axis for probe runs, distinct from every sweep axis.
const PROBE_AXIS: u64 = u64::MAX;

/// 12 bisection halvings of (0, 1) pin α* to a width-2⁻¹² interval.
const BISECTIONS: u32 = 12;

#[derive(Clone, Debug)]
pub struct ThresholdReport {
    /// α* per probe seed, in seed order.
    pub per_seed: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub noiseless_gap: f64,
    pub n_probe: usize,
    pub factor: f64,
}

impl ThresholdReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "threshold search: gap at N = {} within {} x noiseless gap ({:.6e})\n",
            self.n_probe, self.factor, self.noiseless_gap
        );
        for (i, a) in self.per_seed.iter().enumerate() {
            out.push_str(&format!("seed {i:2}: alpha* = {a:.6}\n"));
        }
        out.push_str(&format!(
            "alpha* min {:.6} / median {:.6} / max {:.6} over {} seeds (interval width < 2^-{})\n",
            self.min,
            self.median,
            self.max,
            self.per_seed.len(),
            BISECTIONS
        ));
        out
    }
}

fn with_alpha(assembled: &Assembled, alpha: f64) -> Result<Assembled> {
    let mode = match &assembled.oracle_kind {
        OracleKind::Analytic(NoiseModel::Relative { mode, .. }) => *mode,
        other => {
            return Err(HarnessError::Core(Error::config(format!(
                "threshold search needs relative noise, found {other:?}"
            ))));
        }
    };
    Ok(Assembled {
        problem: assembled.problem.clone(),
        solver: assembled.solver.clone(),
        oracle_kind: OracleKind::Analytic(NoiseModel::Relative { alpha, mode }),
    })
}

/// Final recorded gap of a probe run; divergence, abort, or a non-finite
/// objective all count as +∞ (the probe simply failed).
fn probe_gap(assembled: &Assembled, alpha: f64, seed: u64) -> Result<f64> {
    let probe = with_alpha(assembled, alpha)?;
    let trace = run_once(&probe, seed)?;
    if trace.abort.is_some() {
        return Ok(f64::INFINITY);
    }
    let f_star = trace.f_star.expect("checked before probing");
    let gap = trace.records.last().map_or(f64::INFINITY, |r| r.f_x - f_star);
    Ok(if gap.is_finite() { gap } else { f64::INFINITY })
}

/// Bisection search for one seed. `level` is the acceptance level
/// factor × noiseless gap; every probe reuses the same seed so the noise
/// stream is fixed while α moves.
fn search_one(assembled: &Assembled, level: f64, seed: u64) -> Result<f64> {
    // a method that tolerates α arbitrarily close to 1 reports exactly 1.0:
    // probing the midpoint of the final bisection cell suffices to tell
    let top = 1.0 - 0.5_f64.powi(BISECTIONS as i32 + 1);
    if probe_gap(assembled, top, seed)? <= level {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if probe_gap(assembled, mid, seed)? <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn threshold_search(cfg: &ExperimentConfig, n_probe: usize, factor: f64, seeds: usize) -> Result<ThresholdReport> {
    if n_probe == 0 {
        return Err(HarnessError::Core(Error::config("threshold probe horizon must be >= 1")));
    }
    if seeds == 0 {
        return Err(HarnessError::Core(Error::config("threshold search needs at least one seed")));
    }
    if !factor.is_finite() || factor <= 0.0 {
        return Err(HarnessError::Core(Error::config(format!("factor must be > 0, got {factor}"))));
    }

    let mut assembled = cfg.assemble_with(Some((SweepParameter::Alpha, 0.0)))?;
    assembled.solver.iterations = n_probe;
    assembled.solver.stopping = None; // the probe compares full-horizon gaps
    if assembled.problem.f_star().is_none() {
        return Err(HarnessError::Core(Error::Unavailable(
            "threshold search needs the problem optimum".into(),
        )));
    }

    let noiseless_gap = probe_gap(&assembled, 0.0, mix_seed(cfg.seed, PROBE_AXIS, u64::MAX))?;
    if !noiseless_gap.is_finite() {
        return Err(HarnessError::Core(Error::Unavailable(
            "noiseless baseline run did not produce a finite gap".into(),
        )));
    }
    let level = factor * noiseless_gap.max(f64::MIN_POSITIVE);
    // the documented success predicate must at least accept the noiseless
    // run itself, otherwise no α can ever pass
    if noiseless_gap > level {
        return Err(HarnessError::Core(Error::config(format!(
            "success predicate fails at alpha = 0: factor {factor} rejects the noiseless gap"
        ))));
    }

    let outcomes = exec::map_indexed(seeds, |i| {
        search_one(&assembled, level, mix_seed(cfg.seed, PROBE_AXIS, i as u64))
    });
    let per_seed: Vec<f64> = outcomes.into_iter().collect::<Result<_>>()?;

    let mut sorted = per_seed.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    Ok(ThresholdReport {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        median,
        per_seed,
        noiseless_gap,
        n_probe,
        factor,
    })
}
