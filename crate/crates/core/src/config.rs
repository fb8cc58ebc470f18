//! Solver configuration.

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::problem::SmoothProblem;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Stm,
    Stm2,
    Gd,
    Tmm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Stm => "stm",
            Algorithm::Stm2 => "stm2",
            Algorithm::Gd => "gd",
            Algorithm::Tmm => "tmm",
        }
    }
}

/// Which inexact lower model drives the estimating sequence: τ=1 keeps the
/// full modulus μ and pays a linear δ₁ error; τ=2 halves the modulus and
/// pays a constant δ₃ error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauMode {
    Tau1,
    Tau2,
}

impl TauMode {
    pub fn mu_tau(self, mu: f64) -> f64 {
        match self {
            TauMode::Tau1 => mu,
            TauMode::Tau2 => mu / 2.0,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            TauMode::Tau1 => 1,
            TauMode::Tau2 => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoppingVariant {
    /// Fires when f(x_N) − f* ≤ (δ₂/A_N)Σ_{j≤N}A_j + 3Rδ₁ + ε.
    Theorem,
    /// Replaces 3Rδ₁ by Rδ₁ + δ₁Σ α_j‖x̃_j − z_{j−1}‖, computable online.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingConfig {
    pub variant: StoppingVariant,
    pub epsilon: f64,
    /// Upper bound on ‖x_start − x*‖.
    pub radius: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// The rule explicitly contains f(x*); no surrogate is invented.
    pub f_star: f64,
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::config(format!("stopping epsilon must be > 0, got {}", self.epsilon)));
        }
        if !self.radius.is_finite() || self.radius <= 0.0 {
            return Err(Error::config(format!("stopping radius must be > 0, got {}", self.radius)));
        }
        if self.delta1 < 0.0 || self.delta2 < 0.0 {
            return Err(Error::config("stopping noise constants must be >= 0"));
        }
        if !self.f_star.is_finite() {
            return Err(Error::config("stopping rule requires a finite f_star"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestartSchedule {
    /// Restart every `period` iterations.
    FixedPeriod(usize),
    /// Restart as soon as the gap halves; requires f*.
    GapHalving,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub tau: TauMode,
    /// Method constant fed to the step recurrence; always 2·L_f, stored once
    /// so nothing downstream doubles it again.
    pub l: f64,
    /// Strong-convexity modulus of the problem (μ_τ is derived via `tau`).
    pub mu: f64,
    pub iterations: usize,
    pub seed: u64,
    pub x_start: Vector,
    pub feasible: FeasibleSet,
    pub stopping: Option<StoppingConfig>,
    pub restart: Option<RestartSchedule>,
    /// Gradient-descent step size; defaults to 1/L_f = 2/l when absent.
    pub gd_step: Option<f64>,
}

impl SolverConfig {
    /// Canonical configuration for a problem: start at the origin,
    /// unconstrained, constants taken from the problem.
    pub fn for_problem(
        problem: &SmoothProblem,
        algorithm: Algorithm,
        tau: TauMode,
        iterations: usize,
        seed: u64,
    ) -> SolverConfig {
        SolverConfig {
            algorithm,
            tau,
            l: 2.0 * problem.l_f(),
            mu: problem.mu(),
            iterations,
            seed,
            x_start: Vector::zeros(problem.dim()),
            feasible: FeasibleSet::WholeSpace,
            stopping: None,
            restart: None,
            gd_step: None,
        }
    }

    pub fn mu_tau(&self) -> f64 {
        self.tau.mu_tau(self.mu)
    }

    pub fn l_f(&self) -> f64 {
        self.l / 2.0
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.l.is_finite() || self.l <= 0.0 {
            return Err(Error::config(format!("method constant L must be > 0, got {}", self.l)));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::config(format!("mu must be >= 0, got {}", self.mu)));
        }
        if self.tau == TauMode::Tau2 && self.mu == 0.0 {
            return Err(Error::config("tau = 2 requires mu > 0"));
        }
        if self.x_start.len() != dim {
            return Err(Error::Dimension { expected: dim, got: self.x_start.len() });
        }
        self.feasible.validate(dim)?;
        if !self.feasible.contains(&self.x_start, 1e-12) {
            return Err(Error::config("x_start lies outside the feasible set"));
        }
        if let Some(stopping) = &self.stopping {
            stopping.validate()?;
        }
        if let Some(RestartSchedule::FixedPeriod(period)) = self.restart {
            if period == 0 {
                return Err(Error::config("restart period must be >= 1"));
            }
        }
        if let Some(h) = self.gd_step {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::config(format!("gd step must be > 0, got {h}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::diagonal_quadratic;

    #[test]
    fn tau2_requires_strong_convexity() {
        let p = diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let cfg = SolverConfig::for_problem(&p, Algorithm::Stm, TauMode::Tau2, 10, 0);
        assert!(cfg.validate(p.dim()).is_err());
        let cfg = SolverConfig::for_problem(&p, Algorithm::Stm, TauMode::Tau1, 10, 0);
        cfg.validate(p.dim()).unwrap();
    }

    #[test]
    fn l_is_doubled_smoothness() {
        let p = diagonal_quadratic(&[0.5, 2.0]).unwrap();
        let cfg = SolverConfig::for_problem(&p, Algorithm::Stm, TauMode::Tau1, 10, 0);
        assert_eq!(cfg.l, 4.0);
        assert_eq!(cfg.l_f(), 2.0);
    }

    #[test]
    fn mu_tau_halves_for_tau2() {
        assert_eq!(TauMode::Tau1.mu_tau(0.5), 0.5);
        assert_eq!(TauMode::Tau2.mu_tau(0.5), 0.25);
    }

    #[test]
    fn infeasible_start_rejected() {
        let p = diagonal_quadratic(&[1.0]).unwrap();
        let mut cfg = SolverConfig::for_problem(&p, Algorithm::Stm, TauMode::Tau1, 10, 0);
        cfg.feasible = FeasibleSet::Ball {
            center: Vector::new(vec![5.0]).unwrap(),
            radius: 1.0,
        };
        assert!(cfg.validate(1).is_err());
    }
}
