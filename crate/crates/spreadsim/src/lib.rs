//! Simulation and analytic valuation for pairs of Brownian motions coupled
//! through barrier reflections or local correlation, with an application to
//! energy spread products.
//!
//! The crate provides:
//!
//! - [`gauss`]: scalar Gaussian kernels (normal CDF, inverse CDF, bivariate
//!   CDF) accurate enough to compose inside the closed-form copulas;
//! - [`path`]: reproducible Brownian increments with per-path substreams,
//!   parallelizable without changing any result;
//! - [`reflection`]: the single-barrier reflection model, its two-state
//!   copula and the closed-form survival function of the difference;
//! - [`multibarrier`]: the multi-barrier correlation model, its reflection
//!   ladder and the survival series;
//! - [`local_corr`]: the state-dependent (local) correlation diffusion;
//! - [`estimators`]: survival curves, empirical copulas, Monte Carlo
//!   estimates and goodness-of-fit statistics;
//! - [`commodities`]: two-factor forward dynamics for a pair of commodities
//!   and spread-option pricing under the different dependence structures.

pub mod commodities;
pub mod error;
pub mod estimators;
pub mod gauss;
pub mod local_corr;
pub mod multibarrier;
pub mod path;
pub mod reflection;

pub use error::{Error, Result};
pub use gauss::{Correlation, Probability};
