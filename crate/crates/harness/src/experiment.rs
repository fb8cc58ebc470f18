//! Configured runs and parameter sweeps.
//!
//! Seed discipline: repetition `rep` of axis value `vi` always runs with
//! `mix_seed(master, vi, rep)` — run_experiment is the degenerate `vi = 0`
//! case — so any cell of a sweep can be reproduced in isolation and the
//! parallel schedule cannot influence results. Solvers execute through
//! `exec::map_indexed` (ordered fan-out), all file writes happen afterwards
//! in (axis, repetition) order.

use std::path::{Path, PathBuf};

use noisy_stm_core::config::Algorithm;
use noisy_stm_core::exec;
use noisy_stm_core::oracles::{mix_seed, OracleKind};
use noisy_stm_core::problem::inexactness_constants;
use noisy_stm_core::solvers::{gd_run, restart_run, stm2_run, stm_run, theoretical_bounds, tmm_run, BoundCurve};
use noisy_stm_core::{GradientOracle, Trace};

use crate::config::{Assembled, ExperimentConfig};
use crate::csv::{self, Row};
use crate::{HarnessError, Result};

/// One solver run with a fully derived seed.
pub fn run_once(assembled: &Assembled, seed: u64) -> Result<Trace> {
    let mut config = assembled.solver.clone();
    config.seed = seed;
    let mut oracle = GradientOracle::new(assembled.oracle_kind.clone(), seed);
    let problem = &assembled.problem;
    let trace = match config.restart {
        Some(schedule) => restart_run(problem, &mut oracle, &config, schedule)?,
        None => match config.algorithm {
            Algorithm::Stm => stm_run(problem, &mut oracle, &config)?,
            Algorithm::Stm2 => stm2_run(problem, &mut oracle, &config)?,
            Algorithm::Gd => gd_run(problem, &mut oracle, &config)?,
            Algorithm::Tmm => tmm_run(problem, &mut oracle, &config)?,
        },
    };
    Ok(trace)
}

/// Theory curves for the CSV overlay, when the run's constants support
/// them: an oracle with a certified absolute error level and a problem with
/// a known minimizer. The δ₁ term uses the realized trajectory radius of
/// this trace. Failure to evaluate is not an error — the columns stay empty.
pub fn bounds_for(assembled: &Assembled, trace: &Trace) -> Option<BoundCurve> {
    let delta = match &assembled.oracle_kind {
        OracleKind::Analytic(model) => model.absolute_delta()?,
        _ => return None,
    };
    let r = assembled.problem.radius_from(&assembled.solver.x_start)?;
    if r <= 0.0 {
        return None;
    }
    let cfg = &assembled.solver;
    let constants = inexactness_constants(delta, cfg.l_f(), cfg.mu).ok()?;
    let r_tilde = trace.r_tilde.last().copied().unwrap_or(r);
    let n = trace.records.len().checked_sub(1)?;
    theoretical_bounds(
        cfg.l,
        cfg.mu,
        r,
        constants.delta1,
        constants.delta2,
        constants.delta3,
        r_tilde,
        n,
    )
    .ok()
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub traces: Vec<Trace>,
    pub rep_rows: Vec<Vec<Row>>,
    pub mean: Vec<Row>,
    pub files: Vec<PathBuf>,
}

impl RunArtifacts {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let reps = self.traces.len();
        let final_gaps: Vec<f64> = self
            .traces
            .iter()
            .filter_map(|t| t.f_star.map(|fs| t.records.last().map_or(f64::NAN, |r| r.f_x - fs)))
            .collect();
        if final_gaps.len() == reps {
            let mean = final_gaps.iter().sum::<f64>() / reps as f64;
            out.push_str(&format!("final f-gap mean over {reps} repetitions: {mean:.6e}\n"));
        }
        let stopped = self.traces.iter().filter(|t| t.stopped_at.is_some()).count();
        if stopped > 0 {
            out.push_str(&format!("stopping rule fired in {stopped}/{reps} repetitions\n"));
        }
        let aborted = self.traces.iter().filter(|t| t.abort.is_some()).count();
        if aborted > 0 {
            out.push_str(&format!("aborted (divergence/overflow): {aborted}/{reps}\n"));
        }
        let calls = self.traces.iter().map(|t| t.oracle_calls).sum::<u64>();
        out.push_str(&format!("oracle gradient calls (total): {calls}\n"));
        for f in &self.files {
            out.push_str(&format!("wrote {}\n", f.display()));
        }
        out
    }
}

fn run_repetitions(assembled: &Assembled, master: u64, axis: u64, reps: usize) -> Result<Vec<Trace>> {
    let outcomes = exec::map_indexed(reps, |rep| run_once(assembled, mix_seed(master, axis, rep as u64)));
    outcomes.into_iter().collect()
}

fn write_run_dir(assembled: &Assembled, traces: &[Trace], dir: &Path, files: &mut Vec<PathBuf>) -> Result<RunArtifacts> {
    let rep_rows: Vec<Vec<Row>> = traces
        .iter()
        .map(|t| csv::trace_rows(t, bounds_for(assembled, t).as_ref()))
        .collect();
    let mean = csv::mean_rows(&rep_rows);
    for (rep, rows) in rep_rows.iter().enumerate() {
        let path = dir.join(format!("rep_{rep:03}.csv"));
        csv::write_file(&path, &csv::render(rows))?;
        files.push(path);
    }
    let mean_path = dir.join("mean.csv");
    csv::write_file(&mean_path, &csv::render(&mean))?;
    files.push(mean_path);
    Ok(RunArtifacts { traces: traces.to_vec(), rep_rows, mean, files: files.clone() })
}

/// Runs `repetitions` independent repetitions and writes `rep_XXX.csv` per
/// repetition plus an aggregate `mean.csv`. The resolved config is echoed
/// to `config.toml` first, which also proves the directory is writable
/// before any solver work starts.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let assembled = cfg.assemble()?;
    std::fs::create_dir_all(out_dir)?;
    csv::write_file(&out_dir.join("config.toml"), &cfg.to_toml_string()?)?;

    let traces = run_repetitions(&assembled, cfg.seed, 0, cfg.repetitions)?;
    let mut files = vec![out_dir.join("config.toml")];
    write_run_dir(&assembled, &traces, out_dir, &mut files)
}

pub struct SweepArtifacts {
    pub values: Vec<f64>,
    pub per_value: Vec<RunArtifacts>,
    pub comparison: PathBuf,
}

impl SweepArtifacts {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (value, artifacts) in self.values.iter().zip(&self.per_value) {
            let gaps: Vec<f64> = artifacts
                .traces
                .iter()
                .filter_map(|t| t.f_star.map(|fs| t.records.last().map_or(f64::NAN, |r| r.f_x - fs)))
                .collect();
            if !gaps.is_empty() {
                let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
                out.push_str(&format!("value {value}: final f-gap mean {mean:.6e}\n"));
            }
        }
        out.push_str(&format!("wrote {}\n", self.comparison.display()));
        out
    }
}

/// Runs the configured `[sweep]` axis: every (value, repetition) cell is an
/// independent job, fanned out together and reassembled in order, then one
/// directory per value plus a wide `comparison.csv` are written.
pub fn sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepArtifacts> {
    let section = cfg
        .sweep
        .clone()
        .ok_or_else(|| HarnessError::Core(noisy_stm_core::Error::config("sweep needs a [sweep] section")))?;
    let parameter = section.parameter;
    let values = section.values;

    let assembled: Vec<Assembled> = values
        .iter()
        .map(|v| cfg.assemble_with(Some((parameter, *v))))
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(out_dir)?;
    csv::write_file(&out_dir.join("config.toml"), &cfg.to_toml_string()?)?;

    let reps = cfg.repetitions;
    let master = cfg.seed;
    let jobs = values.len() * reps;
    let outcomes = exec::map_indexed(jobs, |j| {
        let (vi, rep) = (j / reps, j % reps);
        run_once(&assembled[vi], mix_seed(master, vi as u64, rep as u64))
    });
    let mut traces: Vec<Vec<Trace>> = vec![Vec::with_capacity(reps); values.len()];
    for (j, outcome) in outcomes.into_iter().enumerate() {
        traces[j / reps].push(outcome?);
    }

    let mut per_value = Vec::with_capacity(values.len());
    for (vi, (a, ts)) in assembled.iter().zip(&traces).enumerate() {
        let dir = out_dir.join(format!("value_{vi:02}"));
        std::fs::create_dir_all(&dir)?;
        let mut files = Vec::new();
        per_value.push(write_run_dir(a, ts, &dir, &mut files)?);
    }

    let means: Vec<Vec<Row>> = per_value.iter().map(|a| a.mean.clone()).collect();
    let table = csv::comparison_table(parameter.name(), &values, &means);
    let comparison = out_dir.join("comparison.csv");
    csv::write_file(&comparison, &table)?;

    Ok(SweepArtifacts { values, per_value, comparison })
}
