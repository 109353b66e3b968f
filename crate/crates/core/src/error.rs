//! Error type shared by the numerical core.

use thiserror::Error;

/// Errors raised by scenario validation, operator assembly and evolution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// Metric scale factor failed positivity at some time.
    #[error("degenerate metric at t = {t}: scale factor {value} is not positive")]
    DegenerateMetric { t: f64, value: f64 },

    /// Curvature closed form not available for the requested variant.
    #[error("ricci tensor has no closed form for this metric variant: {0}")]
    UnsupportedVariant(&'static str),

    /// Effective dimension below the grid dimension.
    #[error("effective dimension m = {m} must satisfy m >= n = {n}")]
    InvalidDimension { m: f64, n: usize },

    /// `m = n` is reserved for the unweighted Laplacian.
    #[error("m = n requires a constant potential")]
    ConventionViolation,

    /// Grid parameters outside the supported ranges.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Scenario-level validation failure.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A field that must be strictly positive was not.
    #[error("field must be strictly positive (min = {min})")]
    NonPositiveField { min: f64 },

    /// Time outside the scenario window.
    #[error("time t = {t} outside the window [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    /// Crank-Nicolson and the implicit-Euler fallback both produced
    /// non-positive values.
    #[error("positivity failure during evolution (min = {min} after fallback)")]
    PositivityFailure { min: f64 },

    /// Uniform time grid required by the finite-difference estimators.
    #[error("t-grid must be uniformly spaced for derivative estimation")]
    NonUniformTimeGrid,

    /// Sample index too close to the grid ends for central differences.
    #[error("sample {index} is too close to the t-grid ends for interior stencils")]
    TooNearGridEnd { index: usize },

    /// Initial datum not normalized where the definition requires mass one.
    #[error("initial datum must satisfy \\int u d\\mu = 1, got {mass}")]
    NotNormalized { mass: f64 },

    /// Closed-form kernels require positive time.
    #[error("kernel time must be positive, got t = {t}")]
    NonPositiveTime { t: f64 },

    /// Gaussian covariance degenerated during propagation.
    #[error("covariance is not positive-definite")]
    DegenerateCovariance,
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, ModelError>;
