//! Optimal-loss estimation for diffusion models.
//!
//! The training loss of a diffusion model has a nonzero floor set by the
//! data distribution: at every noise scale the best possible prediction of
//! the clean sample is its posterior mean, and the residual is an averaged
//! conditional variance. This crate estimates that floor directly from a
//! dataset, converts losses and preconditioners between mainstream
//! diffusion formulations, derives training schedules from the gap between
//! actual and optimal loss, and fits offset power laws for scaling-law
//! analysis.
//!
//! Modules:
//! - [`dataset`], [`grid`], [`process`], [`config`], [`curve`]: shared domain types.
//! - [`ingest`]: dataset files (DOLD binary, CSV) and synthetic generators.
//! - [`kernels`]: the stable posterior-mean inner loop.
//! - [`estimators`]: the optimal-loss estimators and the repeat/convergence loop.
//! - [`oracles`]: closed-form and quadrature ground truth for synthetic data.
//! - [`formulations`]: the unified-formulation conversion table.
//! - [`schedule`]: loss weights and the adaptive noise schedule.
//! - [`scaling`]: offset power-law fits of training-curve envelopes.

// negated comparisons are deliberate: `!(v > 0.0)` rejects NaN along with
// the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

pub mod config;
pub mod curve;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod formulations;
pub mod grid;
pub mod ingest;
pub mod kernels;
pub mod oracles;
pub mod process;
pub mod rng;
pub mod scaling;
pub mod schedule;

pub use config::{Correction, EstimatorConfig};
pub use curve::OptimalLossCurve;
pub use dataset::{data_variance, Dataset, UnitConvention};
pub use error::{Error, Result};
pub use grid::NoiseGrid;
pub use process::ProcessKind;
