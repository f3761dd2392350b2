//! Meta-analysis of two-group median differences.
//!
//! A study that reports a median and a group size for each arm
//! contributes the effect `Y = median1 - median2`. This crate pools such
//! effects three ways:
//!
//! - [`dive`]: sample-size-weighted pooling with a direct closed-form
//!   estimator of the pooled variance, needing nothing beyond `(Y, n)`
//!   per study;
//! - [`qe`]: the quantile-estimation route, which fits parametric
//!   families to reported quartiles to recover within-study variances
//!   and then applies inverse-variance weighting ([`ivw`]) under a
//!   fixed-effect or DerSimonian-Laird random-effects model;
//! - [`ivw`]: the classical inverse-variance machinery itself.
//!
//! [`sim`] is a Monte Carlo harness that evaluates all three against
//! analytic variance benchmarks over a factorial grid of outcome shapes,
//! sample-size patterns, and heterogeneity levels, with reproducible
//! counter-based random streams ([`streams`]). [`dist`] carries the
//! distribution toolkit behind both the fitting and the generation.

pub mod dist;
pub mod dive;
pub mod ivw;
pub mod model;
pub mod qe;
pub mod sim;
pub mod streams;

pub use model::{
    CiFlavor, GroupSummary, Method, PooledResult, StudyRecord, ValidationError, WeightVector,
    validate_studies,
};
