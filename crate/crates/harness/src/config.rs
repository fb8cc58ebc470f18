//! Experiment configuration: a TOML file with sections `[problem]`,
//! `[solver]`, `[noise]`, `[stopping]`, `[sweep]` plus top-level `seed`,
//! `repetitions`, `out`. Unknown keys are rejected, and so are known keys
//! that do not apply to the selected kind — a typo never silently changes
//! an experiment. Configs round-trip: parse → serialize → parse is the
//! identity, and serialize is byte-stable from then on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use noisy_stm_core::config::{Algorithm, RestartSchedule, SolverConfig, StoppingConfig, StoppingVariant, TauMode};
use noisy_stm_core::linalg::DenseMatrix;
use noisy_stm_core::oracles::{AbsoluteMode, OracleKind, RelativeMode};
use noisy_stm_core::problem::{inexactness_constants, SmoothProblem};
use noisy_stm_core::problems;
use noisy_stm_core::{Error, FeasibleSet, NoiseModel, Vector};

use crate::{HarnessError, Result};

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Core(Error::config(msg))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    NesterovDegenerate,
    NesterovStronglyConvex,
    DiagonalQuadratic,
    LeastSquares,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Stm,
    Stm2,
    Gd,
    Tmm,
}

impl AlgorithmName {
    pub fn to_core(self) -> Algorithm {
        match self {
            AlgorithmName::Stm => Algorithm::Stm,
            AlgorithmName::Stm2 => Algorithm::Stm2,
            AlgorithmName::Gd => Algorithm::Gd,
            AlgorithmName::Tmm => Algorithm::Tmm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    Absolute,
    Relative,
    CentralFd,
    SphereSmoothed,
    GaussianSmoothed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModeName {
    Sphere,
    Bias,
    Shrink,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingName {
    #[default]
    Theorem,
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Delta,
    Alpha,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Delta => "delta",
            SweepParameter::Alpha => "alpha",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Degenerate chain length; defaults to n/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Scale constant of the degenerate worst-case function.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Least-squares design matrix, one inner list per row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<f64>>,
}

impl ProblemSection {
    pub fn build(&self) -> Result<SmoothProblem> {
        let reject = |keys: &[(&str, bool)]| -> Result<()> {
            for (name, present) in keys {
                if *present {
                    return Err(cfg_err(format!(
                        "[problem] key `{name}` does not apply to kind `{:?}`",
                        self.kind
                    )));
                }
            }
            Ok(())
        };
        match self.kind {
            ProblemKind::NesterovDegenerate => {
                reject(&[
                    ("mu", self.mu.is_some()),
                    ("chi", self.chi.is_some()),
                    ("lambdas", self.lambdas.is_some()),
                    ("matrix", self.matrix.is_some()),
                    ("rhs", self.rhs.is_some()),
                ])?;
                let n = self.n.unwrap_or(100);
                let k = self.k.unwrap_or(n / 2);
                Ok(problems::nesterov_degenerate(n, k, self.l.unwrap_or(2.0))?)
            }
            ProblemKind::NesterovStronglyConvex => {
                reject(&[
                    ("k", self.k.is_some()),
                    ("l", self.l.is_some()),
                    ("lambdas", self.lambdas.is_some()),
                    ("matrix", self.matrix.is_some()),
                    ("rhs", self.rhs.is_some()),
                ])?;
                let n = self.n.unwrap_or(100);
                let mu = self.mu.ok_or_else(|| cfg_err("[problem] nesterov-strongly-convex needs `mu`"))?;
                let chi = self.chi.ok_or_else(|| cfg_err("[problem] nesterov-strongly-convex needs `chi`"))?;
                Ok(problems::nesterov_strongly_convex(n, mu, chi)?)
            }
            ProblemKind::DiagonalQuadratic => {
                reject(&[
                    ("n", self.n.is_some()),
                    ("k", self.k.is_some()),
                    ("l", self.l.is_some()),
                    ("mu", self.mu.is_some()),
                    ("chi", self.chi.is_some()),
                    ("matrix", self.matrix.is_some()),
                    ("rhs", self.rhs.is_some()),
                ])?;
                let lambdas =
                    self.lambdas.as_ref().ok_or_else(|| cfg_err("[problem] diagonal-quadratic needs `lambdas`"))?;
                Ok(problems::diagonal_quadratic(lambdas)?)
            }
            ProblemKind::LeastSquares => {
                reject(&[
                    ("n", self.n.is_some()),
                    ("k", self.k.is_some()),
                    ("l", self.l.is_some()),
                    ("mu", self.mu.is_some()),
                    ("chi", self.chi.is_some()),
                    ("lambdas", self.lambdas.is_some()),
                ])?;
                let rows = self.matrix.as_ref().ok_or_else(|| cfg_err("[problem] least-squares needs `matrix`"))?;
                let rhs = self.rhs.as_ref().ok_or_else(|| cfg_err("[problem] least-squares needs `rhs`"))?;
                if rows.is_empty() {
                    return Err(cfg_err("[problem] matrix needs at least one row"));
                }
                let cols = rows[0].len();
                let mut flat = Vec::with_capacity(rows.len() * cols);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != cols {
                        return Err(cfg_err(format!(
                            "[problem] matrix row {i} has {} entries, expected {cols}",
                            row.len()
                        )));
                    }
                    flat.extend_from_slice(row);
                }
                let a = DenseMatrix::new(rows.len(), cols, flat)?;
                let b = Vector::new(rhs.clone())?;
                Ok(problems::least_squares(a, b)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: AlgorithmName,
    /// Inexact lower model index, 1 or 2.
    #[serde(default = "default_tau")]
    pub tau: u8,
    pub iterations: usize,
    /// Method constant override; defaults to 2·L_f of the problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_start: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart_period: Option<usize>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub restart_gap_halving: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_upper: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
}

fn default_tau() -> u8 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl SolverSection {
    fn tau_mode(&self) -> Result<TauMode> {
        match self.tau {
            1 => Ok(TauMode::Tau1),
            2 => Ok(TauMode::Tau2),
            other => Err(cfg_err(format!("[solver] tau must be 1 or 2, got {other}"))),
        }
    }

    fn feasible_set(&self) -> Result<FeasibleSet> {
        let boxed = self.box_lower.is_some() || self.box_upper.is_some();
        let balled = self.ball_center.is_some() || self.ball_radius.is_some();
        if boxed && balled {
            return Err(cfg_err("[solver] configure either a box or a ball, not both"));
        }
        if boxed {
            let lower = self.box_lower.as_ref().ok_or_else(|| cfg_err("[solver] box needs `box_lower`"))?;
            let upper = self.box_upper.as_ref().ok_or_else(|| cfg_err("[solver] box needs `box_upper`"))?;
            return Ok(FeasibleSet::Box {
                lower: Vector::new(lower.clone())?,
                upper: Vector::new(upper.clone())?,
            });
        }
        if balled {
            let center = self.ball_center.as_ref().ok_or_else(|| cfg_err("[solver] ball needs `ball_center`"))?;
            let radius = self.ball_radius.ok_or_else(|| cfg_err("[solver] ball needs `ball_radius`"))?;
            return Ok(FeasibleSet::Ball { center: Vector::new(center.clone())?, radius });
        }
        Ok(FeasibleSet::WholeSpace)
    }

    fn restart(&self) -> Result<Option<RestartSchedule>> {
        match (self.restart_period, self.restart_gap_halving) {
            (Some(_), true) => Err(cfg_err("[solver] pick one restart schedule, not both")),
            (Some(p), false) => Ok(Some(RestartSchedule::FixedPeriod(p))),
            (None, true) => Ok(Some(RestartSchedule::GapHalving)),
            (None, false) => Ok(None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// `sphere` (default) or `bias` for absolute noise; `sphere` or `shrink`
    /// for relative noise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<NoiseModeName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
    /// Finite-difference / smoothing step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl NoiseSection {
    fn exact() -> NoiseSection {
        NoiseSection {
            kind: NoiseKind::None,
            delta: None,
            alpha: None,
            mode: None,
            bias: None,
            h: None,
            samples: None,
        }
    }

    pub fn oracle_kind(&self) -> Result<OracleKind> {
        let reject = |keys: &[(&str, bool)]| -> Result<()> {
            for (name, present) in keys {
                if *present {
                    return Err(cfg_err(format!(
                        "[noise] key `{name}` does not apply to kind `{:?}`",
                        self.kind
                    )));
                }
            }
            Ok(())
        };
        let zeroth = |name: &str| -> Result<(f64, usize)> {
            reject(&[
                ("delta", self.delta.is_some()),
                ("alpha", self.alpha.is_some()),
                ("mode", self.mode.is_some()),
                ("bias", self.bias.is_some()),
            ])?;
            let h = self.h.ok_or_else(|| cfg_err(format!("[noise] {name} needs `h`")))?;
            Ok((h, self.samples.unwrap_or(64)))
        };
        match self.kind {
            NoiseKind::None => {
                reject(&[
                    ("delta", self.delta.is_some()),
                    ("alpha", self.alpha.is_some()),
                    ("mode", self.mode.is_some()),
                    ("bias", self.bias.is_some()),
                    ("h", self.h.is_some()),
                    ("samples", self.samples.is_some()),
                ])?;
                Ok(OracleKind::Analytic(NoiseModel::None))
            }
            NoiseKind::Absolute => {
                reject(&[
                    ("alpha", self.alpha.is_some()),
                    ("h", self.h.is_some()),
                    ("samples", self.samples.is_some()),
                ])?;
                let delta = self.delta.ok_or_else(|| cfg_err("[noise] absolute needs `delta`"))?;
                let mode = match self.mode.unwrap_or(NoiseModeName::Sphere) {
                    NoiseModeName::Sphere => {
                        if self.bias.is_some() {
                            return Err(cfg_err("[noise] `bias` requires mode = \"bias\""));
                        }
                        AbsoluteMode::SphereUniform
                    }
                    NoiseModeName::Bias => {
                        let bias = self.bias.as_ref().ok_or_else(|| cfg_err("[noise] mode bias needs `bias`"))?;
                        AbsoluteMode::FixedBias(Vector::new(bias.clone())?)
                    }
                    NoiseModeName::Shrink => {
                        return Err(cfg_err("[noise] shrink is a relative-noise mode"));
                    }
                };
                Ok(OracleKind::Analytic(NoiseModel::Absolute { delta, mode }))
            }
            NoiseKind::Relative => {
                reject(&[
                    ("delta", self.delta.is_some()),
                    ("bias", self.bias.is_some()),
                    ("h", self.h.is_some()),
                    ("samples", self.samples.is_some()),
                ])?;
                let alpha = self.alpha.ok_or_else(|| cfg_err("[noise] relative needs `alpha`"))?;
                let mode = match self.mode.unwrap_or(NoiseModeName::Sphere) {
                    NoiseModeName::Sphere => RelativeMode::SphereUniform,
                    NoiseModeName::Shrink => RelativeMode::Shrink,
                    NoiseModeName::Bias => {
                        return Err(cfg_err("[noise] bias is an absolute-noise mode"));
                    }
                };
                Ok(OracleKind::Analytic(NoiseModel::Relative { alpha, mode }))
            }
            NoiseKind::CentralFd => {
                let (h, _) = zeroth("central-fd")?;
                if self.samples.is_some() {
                    return Err(cfg_err("[noise] key `samples` does not apply to kind `CentralFd`"));
                }
                Ok(OracleKind::CentralFd { h })
            }
            NoiseKind::SphereSmoothed => {
                let (h, samples) = zeroth("sphere-smoothed")?;
                Ok(OracleKind::SphereSmoothed { h, samples })
            }
            NoiseKind::GaussianSmoothed => {
                let (h, samples) = zeroth("gaussian-smoothed")?;
                Ok(OracleKind::GaussianSmoothed { h, samples })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSection {
    #[serde(default)]
    pub variant: StoppingName,
    pub epsilon: f64,
    /// Upper bound on the distance from x_start to the minimizer.
    pub radius: f64,
    /// Explicit rule constants; absent means "derive from the noise model",
    /// which needs an oracle with a certified absolute error level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StoppingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_repetitions() -> usize {
    30
}

/// A config resolved against the actual problem: everything a run needs
/// except the per-repetition seed.
#[derive(Debug)]
pub struct Assembled {
    pub problem: SmoothProblem,
    pub solver: SolverConfig,
    pub oracle_kind: OracleKind,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::ConfigFile(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::ConfigFile(e.to_string()))
    }

    /// Structural checks that do not need the problem built yet.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(cfg_err("repetitions must be >= 1"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(cfg_err("[sweep] values must not be empty"));
            }
            if let Some(bad) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(cfg_err(format!("[sweep] values must be finite, got {bad}")));
            }
        }
        Ok(())
    }

    pub fn assemble(&self) -> Result<Assembled> {
        self.assemble_with(None)
    }

    /// Builds the run pieces, optionally overriding the swept noise level.
    /// A `delta` override turns the noise section into absolute noise at that
    /// level (keeping its mode), an `alpha` override into relative noise; a
    /// section of the wrong family is a configuration error rather than a
    /// silent replacement.
    pub fn assemble_with(&self, axis: Option<(SweepParameter, f64)>) -> Result<Assembled> {
        self.validate()?;
        let problem = self.problem.build()?;

        let noise = match axis {
            None => self.noise.clone().unwrap_or_else(NoiseSection::exact),
            Some((param, value)) => self.substituted_noise(param, value)?,
        };
        let oracle_kind = noise.oracle_kind()?;

        let tau = self.solver.tau_mode()?;
        let l = self.solver.l.unwrap_or(2.0 * problem.l_f());
        let mu = self.solver.mu.unwrap_or(problem.mu());
        let x_start = match &self.solver.x_start {
            Some(x) => Vector::new(x.clone())?,
            None => Vector::zeros(problem.dim()),
        };
        let stopping = match &self.stopping {
            Some(section) => Some(self.stopping_config(section, &problem, &noise, l, mu)?),
            None => None,
        };
        let solver = SolverConfig {
            algorithm: self.solver.algorithm.to_core(),
            tau,
            l,
            mu,
            iterations: self.solver.iterations,
            seed: self.seed,
            x_start,
            feasible: self.solver.feasible_set()?,
            stopping,
            restart: self.solver.restart()?,
            gd_step: self.solver.gd_step,
        };
        solver.validate(problem.dim())?;

        Ok(Assembled { problem, solver, oracle_kind })
    }

    fn substituted_noise(&self, param: SweepParameter, value: f64) -> Result<NoiseSection> {
        let mut noise = self.noise.clone().unwrap_or_else(NoiseSection::exact);
        match param {
            SweepParameter::Delta => {
                match noise.kind {
                    NoiseKind::None => noise.kind = NoiseKind::Absolute,
                    NoiseKind::Absolute => {}
                    _ => {
                        return Err(cfg_err(format!(
                            "sweeping `delta` needs an absolute noise section, found {:?}",
                            noise.kind
                        )));
                    }
                }
                noise.delta = Some(value);
            }
            SweepParameter::Alpha => {
                match noise.kind {
                    NoiseKind::None => noise.kind = NoiseKind::Relative,
                    NoiseKind::Relative => {}
                    _ => {
                        return Err(cfg_err(format!(
                            "sweeping `alpha` needs a relative noise section, found {:?}",
                            noise.kind
                        )));
                    }
                }
                noise.alpha = Some(value);
            }
        }
        Ok(noise)
    }

    fn stopping_config(
        &self,
        section: &StoppingSection,
        problem: &SmoothProblem,
        noise: &NoiseSection,
        l: f64,
        mu: f64,
    ) -> Result<StoppingConfig> {
        let derived = match noise.oracle_kind()? {
            OracleKind::Analytic(model) => model.absolute_delta(),
            _ => None,
        };
        let (delta1, delta2) = match (section.delta1, section.delta2) {
            (Some(d1), Some(d2)) => (d1, d2),
            (explicit1, explicit2) => {
                let delta = derived.ok_or_else(|| {
                    cfg_err("[stopping] delta1/delta2 must be explicit when the oracle has no absolute error bound")
                })?;
                let constants = inexactness_constants(delta, l / 2.0, mu)?;
                (explicit1.unwrap_or(constants.delta1), explicit2.unwrap_or(constants.delta2))
            }
        };
        let f_star = section
            .f_star
            .or_else(|| problem.f_star())
            .ok_or_else(|| cfg_err("[stopping] needs `f_star` (problem optimum unknown)"))?;
        Ok(StoppingConfig {
            variant: match section.variant {
                StoppingName::Theorem => StoppingVariant::Theorem,
                StoppingName::Adaptive => StoppingVariant::Adaptive,
            },
            epsilon: section.epsilon,
            radius: section.radius,
            delta1,
            delta2,
            f_star,
        })
    }

    /// Output directory: CLI override beats the config key beats `./runs`.
    pub fn out_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        cli_out
            .map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .unwrap_or_else(|| PathBuf::from("runs"))
    }
}
