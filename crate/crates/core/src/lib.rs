//! Sample-size planning for simple linear regression observed on a fixed
//! time interval with Ornstein-Uhlenbeck (OU) errors.
//!
//! Under infill sampling the estimator variances do not vanish as `n` grows;
//! they converge to a limiting value. The ratio of limiting to finite-sample
//! variance measures how much of the attainable precision `n` samples buy.
//! This crate provides:
//!
//! - [`ou_model`]: the OU covariance on an even grid over `[0, 1]` (an AR(1)
//!   sequence with `rho = exp(-lambda / (n - 1))`) and seeded path simulation.
//! - [`variance_formulas`]: closed-form finite-sample and limiting variances
//!   for intercept-only, slope-only and intercept+slope models.
//! - [`matrix_oracle`]: brute-force GLS / OLS estimator covariances and a
//!   Monte Carlo harness used to verify the closed forms.
//! - [`design`]: maximin Latin hypercube designs over the `(n, lambda)` box.
//! - [`threshold_fit`]: centered cubic fits of the variance ratio against
//!   `lambda / n` and the threshold tables derived from them.
//! - [`sizing`]: SNR to `lambda` conversion and minimal sample size search.
//! - [`report`]: run configuration and CSV / JSON rendering used by the CLI.
//!
//! The time axis is always scaled to `[0, 1]`. Data observed on `[0, T]`
//! should use `lambda_scaled = lambda_raw * T`.

pub mod design;
pub mod error;
pub mod matrix_oracle;
pub mod ou_model;
pub mod report;
pub mod sizing;
pub mod threshold_fit;
pub mod variance_formulas;

pub use error::{Error, Result};
pub use ou_model::{Grid, OuParameters};
pub use variance_formulas::{ModelKind, ModelSpec, ParameterTarget, VarianceReport};
