//! CLI entry point. Subcommands map onto the library one-to-one: `run` and
//! `sweep` execute a config file, `threshold` bisects the relative-noise
//! breaking point, `budget` prints the closed-form calculators, `verify`
//! replays the invariant suites. Exit codes: 0 success, 1 failed check,
//! 2 usage or configuration error.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use noisy_stm_core::sequences::{budget_linear_system, budget_regularized, budget_strongly_convex};
use noisy_stm_core::Error;
use noisy_stm_harness::config::ExperimentConfig;
use noisy_stm_harness::experiment::{run_experiment, sweep};
use noisy_stm_harness::threshold::threshold_search;
use noisy_stm_harness::verify::run_verification;
use noisy_stm_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "noisy-stm", version, about = "Accelerated gradient methods under inexact oracles")]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the `seed` key of the config file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory; overrides the `out` key of the config file.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment; writes per-repetition and mean CSVs.
    Run,
    /// Run the configured parameter sweep; adds a comparison table.
    Sweep,
    /// Bisect the relative-noise level where convergence breaks down.
    Threshold {
        /// Probe horizon N: the success predicate reads the gap at this iteration.
        #[arg(long, default_value_t = 300)]
        probe_iters: usize,
        /// Success means gap(N) <= factor x noiseless gap(N).
        #[arg(long, default_value_t = 10.0)]
        factor: f64,
        /// Independent probe seeds; defaults to the config's repetition count.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Print the noise/iteration budget for a target accuracy.
    Budget {
        /// One of: sc (strongly convex), reg (regularized), linsys (linear system).
        #[arg(long)]
        regime: String,
        /// Smoothness constant L.
        #[arg(long = "L")]
        l: Option<f64>,
        /// Strong-convexity constant (sc regime).
        #[arg(long)]
        mu: Option<f64>,
        /// Distance bound R from the start to a minimizer.
        #[arg(long = "R")]
        r: Option<f64>,
        /// Target accuracy on the function gap (sc, reg regimes).
        #[arg(long)]
        eps: Option<f64>,
        /// Minimizer norm bound (linsys regime).
        #[arg(long = "Rstar")]
        r_star: Option<f64>,
        /// Target residual norm (linsys regime).
        #[arg(long)]
        eps1: Option<f64>,
    },
    /// Re-run the library invariant suites and report per-check slack.
    Verify {
        /// Restrict to one module: core, sequences, oracles, geometry, solvers, problems.
        #[arg(long)]
        scope: Option<String>,
        /// Deliberately corrupt a check (negative control); only `recurrence`.
        #[arg(long)]
        poison: Option<String>,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    if let Err(msg) = apply_thread_env() {
        eprintln!("error: {msg}");
        return 2;
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version print to stdout and exit 0; real parse errors get 2
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

/// `NOISY_STM_THREADS` caps the worker count before anything runs:
/// 0 or 1 forces serial execution, larger values cap the pool size.
fn apply_thread_env() -> std::result::Result<(), String> {
    let value = match std::env::var("NOISY_STM_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("NOISY_STM_THREADS: {e}")),
        Ok(v) => v,
    };
    let workers: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("NOISY_STM_THREADS must be a nonnegative integer, got `{value}`"))?;
    if workers <= 1 {
        noisy_stm_core::exec::set_force_serial(true);
    } else {
        noisy_stm_core::exec::cap_threads(workers);
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::ConfigFile("this subcommand needs --config <PATH>".into()))?;
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run => {
            let cfg = load_config(&cli)?;
            let out = cfg.out_dir(cli.out.as_deref());
            let artifacts = run_experiment(&cfg, &out)?;
            print!("{}", artifacts.summary());
            Ok(())
        }
        Command::Sweep => {
            let cfg = load_config(&cli)?;
            let out = cfg.out_dir(cli.out.as_deref());
            let artifacts = sweep(&cfg, &out)?;
            print!("{}", artifacts.summary());
            Ok(())
        }
        Command::Threshold { probe_iters, factor, seeds } => {
            let cfg = load_config(&cli)?;
            let seeds = seeds.unwrap_or(cfg.repetitions);
            let report = threshold_search(&cfg, *probe_iters, *factor, seeds)?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Budget { regime, l, mu, r, eps, r_star, eps1 } => {
            print!("{}", budget_table(regime, *l, *mu, *r, *eps, *r_star, *eps1)?);
            Ok(())
        }
        Command::Verify { scope, poison } => {
            let report = run_verification(scope.as_deref(), poison.as_deref(), cli.seed.unwrap_or(0))?;
            print!("{}", report.render());
            if report.all_ok() {
                Ok(())
            } else {
                let first = report.first_failure().expect("not all ok");
                Err(HarnessError::CheckFailed(format!("invariant {}: {}", first.name, first.detail)))
            }
        }
    }
}

fn require(flag: &str, regime: &str, value: Option<f64>) -> Result<f64> {
    value.ok_or_else(|| {
        HarnessError::Core(Error::config(format!("budget --regime {regime} needs --{flag}")))
    })
}

#[allow(clippy::too_many_arguments)]
fn budget_table(
    regime: &str,
    l: Option<f64>,
    mu: Option<f64>,
    r: Option<f64>,
    eps: Option<f64>,
    r_star: Option<f64>,
    eps1: Option<f64>,
) -> Result<String> {
    let mut rows: Vec<(&str, String)> = Vec::new();
    match regime {
        "sc" => {
            let budget = budget_strongly_convex(
                require("L", regime, l)?,
                require("mu", regime, mu)?,
                require("R", regime, r)?,
                require("eps", regime, eps)?,
            )?;
            rows.push(("regime", "strongly-convex".into()));
            rows.push(("delta_max", format!("{:.6e}", budget.delta_max)));
            rows.push(("iterations", budget.iterations.to_string()));
        }
        "reg" => {
            let budget = budget_regularized(
                require("L", regime, l)?,
                require("R", regime, r)?,
                require("eps", regime, eps)?,
            )?;
            rows.push(("regime", "regularized".into()));
            rows.push(("mu", format!("{:.6e}", budget.mu)));
            rows.push(("delta_max", format!("{:.6e}", budget.delta_max)));
            rows.push(("iterations", budget.iterations.to_string()));
        }
        "linsys" => {
            let budget = budget_linear_system(
                require("L", regime, l)?,
                require("R", regime, r)?,
                require("Rstar", regime, r_star)?,
                require("eps1", regime, eps1)?,
            )?;
            rows.push(("regime", "linear-system".into()));
            rows.push(("c", format!("{:.6e}", budget.c)));
            rows.push(("eps", format!("{:.6e}", budget.eps)));
            rows.push(("delta_max", format!("{:.6e}", budget.delta_max)));
            rows.push(("iterations", budget.iterations.to_string()));
        }
        other => {
            return Err(HarnessError::Core(Error::config(format!(
                "unknown budget regime `{other}`; expected sc, reg, or linsys"
            ))));
        }
    }
    let mut out = String::new();
    for (name, value) in rows {
        out.push_str(&format!("{name:<12} {value}\n"));
    }
    Ok(out)
}
