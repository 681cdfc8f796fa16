//! Kernel density estimation for mixed discrete/continuous data.
//!
//! Discrete coordinates are made continuous by adding bounded noise drawn
//! once at fit time; a single product-kernel density estimate then handles
//! every coordinate uniformly. When the noise density is flat near zero and
//! the discrete bandwidth stays within that flat region, evaluating the
//! smooth estimate back at the integers recovers the cell probabilities
//! without discretization bias, so the usual continuous-data theory (bias
//! expansions, variance, bandwidth selection) applies unchanged.
//!
//! The crate provides the estimator itself ([`estimator`]), the admissible
//! noise densities ([`noise`]), bounded kernels with their moment constants
//! ([`kernels`]), reference and cross-validated bandwidth selection
//! ([`bandwidth`]), closed-form bias/variance/efficiency formulas with
//! quadrature cross-checks ([`theory`]), a simulation harness for risk and
//! convergence-rate studies ([`simharness`]), and JSON model persistence
//! ([`persist`]). All randomness flows through seeded, domain-separated
//! streams ([`rng`]), so every fit, study, and experiment is reproducible.

pub mod bandwidth;
pub mod estimator;
pub mod kernels;
pub mod noise;
pub mod persist;
mod quad;
pub mod rng;
pub mod simharness;
pub mod theory;

/// Errors across the crate. Constructor-style validation failures carry a
/// human-readable explanation of the rejected input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dataset has no observations")]
    EmptyDataset,

    #[error("needs at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("invalid noise density: {0}")]
    InvalidNoise(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),

    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("invalid smoothing parameter: {0}")]
    InvalidSmoothing(String),

    #[error("evaluation grid is empty")]
    EmptyGrid,

    #[error("operation requires discrete-only data (q = 0)")]
    RequiresDiscreteOnly,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
