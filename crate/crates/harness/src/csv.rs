//! CSV emission. One schema for every subcommand:
//!
//! `iter,f_gap,grad_norm,dist_to_opt,A_k,alpha_k,noise_norm,psi_min,adaptive_term,bound_tau1,bound_tau2,bound_mu0`
//!
//! Values are printed with 17 significant digits (`{:.16e}`), fields a run
//! does not produce — and non-finite bound entries like the k = 0 pole of
//! the 1/k² curve — are left empty, and line endings are LF.

use std::path::Path;

use noisy_stm_core::solvers::BoundCurve;
use noisy_stm_core::Trace;

use crate::Result;

pub const CSV_HEADER: &str =
    "iter,f_gap,grad_norm,dist_to_opt,A_k,alpha_k,noise_norm,psi_min,adaptive_term,bound_tau1,bound_tau2,bound_mu0";

/// Number of value columns after `iter`.
pub const VALUE_COLUMNS: usize = 11;

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub iter: usize,
    pub cols: [Option<f64>; VALUE_COLUMNS],
}

pub fn format_field(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => String::new(),
    }
}

/// Flattens a trace (plus optional bound overlays indexed by iteration)
/// into schema rows.
pub fn trace_rows(trace: &Trace, bounds: Option<&BoundCurve>) -> Vec<Row> {
    let f_star = trace.f_star;
    let at = |curve: &Option<Vec<f64>>, k: usize| curve.as_ref().and_then(|c| c.get(k)).copied();
    trace
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| Row {
            iter: r.iter,
            cols: [
                f_star.map(|fs| r.f_x - fs),
                Some(r.grad_norm),
                r.dist_to_opt,
                r.a_k,
                r.alpha_k,
                Some(r.noise_norm),
                r.psi_min,
                r.adaptive_term,
                bounds.and_then(|b| at(&b.tau1, k)),
                bounds.and_then(|b| at(&b.tau2, k)),
                bounds.and_then(|b| b.mu0.get(k)).copied(),
            ],
        })
        .collect()
}

pub fn render(rows: &[Row]) -> String {
    let mut out = String::with_capacity(rows.len() * 200 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter.to_string());
        for col in &row.cols {
            out.push(',');
            out.push_str(&format_field(*col));
        }
        out.push('\n');
    }
    out
}

/// Column-wise means over repetitions. Row k averages every trace that
/// produced a k-th record, so runs without early stopping aggregate to
/// exactly N+1 rows; a column is kept only when every contributing trace
/// filled it, since a mean over a varying subset would be misleading.
pub fn mean_rows(per_rep: &[Vec<Row>]) -> Vec<Row> {
    let longest = per_rep.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let live: Vec<&Row> = per_rep.iter().filter_map(|rows| rows.get(k)).collect();
            let mut cols = [None; VALUE_COLUMNS];
            for (c, slot) in cols.iter_mut().enumerate() {
                let values: Vec<f64> = live.iter().filter_map(|r| r.cols[c]).collect();
                if values.len() == live.len() && !values.is_empty() {
                    *slot = Some(values.iter().sum::<f64>() / values.len() as f64);
                }
            }
            Row { iter: live[0].iter, cols }
        })
        .collect()
}

/// Wide sweep table: `iter` against the mean f-gap of every axis value.
/// Axis values appear in the header via their shortest round-trip decimal.
pub fn comparison_table(parameter: &str, values: &[f64], per_value_means: &[Vec<Row>]) -> String {
    let mut out = String::from("iter");
    for v in values {
        out.push_str(&format!(",{parameter}={v}"));
    }
    out.push('\n');
    let longest = per_value_means.iter().map(Vec::len).max().unwrap_or(0);
    for k in 0..longest {
        out.push_str(&k.to_string());
        for mean in per_value_means {
            out.push(',');
            out.push_str(&format_field(mean.get(k).and_then(|r| r.cols[0])));
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}
