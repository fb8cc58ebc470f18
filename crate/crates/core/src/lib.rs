//! Accelerated first-order optimization under inexact gradients.
//!
//! The crate implements the similar-triangles method (an accelerated
//! one-projection gradient scheme) together with a relative-noise variant,
//! gradient-descent and triple-momentum baselines, restart wrappers, and the
//! supporting machinery: step-weight sequences with closed-form growth
//! bounds, noise models and zeroth-order gradient estimators, Euclidean
//! feasible sets, canonical quadratic test problems, per-iteration
//! certificate checks, an early-stopping rule, and noise-budget calculators.
//!
//! Everything is deterministic given a 64-bit seed; traces produced by two
//! runs with identical configuration and seed are bitwise equal.

pub mod config;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod problem;
pub mod problems;
pub mod record;
pub mod sequences;
pub mod solvers;
pub mod vector;

pub use config::{Algorithm, RestartSchedule, SolverConfig, StoppingConfig, StoppingVariant, TauMode};
pub use error::{Error, Result};
pub use geometry::FeasibleSet;
pub use oracles::{GradientOracle, NoiseModel, RngStream};
pub use problem::{InexactnessConstants, SmoothProblem};
pub use record::{AbortReason, IterRecord, Trace};
pub use vector::Vector;
