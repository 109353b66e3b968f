//! Numerical laboratory for heat flows of weighted Laplacians on model
//! geometries with time-dependent metrics and potentials.
//!
//! The crate discretizes the weighted (Witten) Laplacian
//! `L = Δ_g - ∇φ·∇` in divergence form on flat tori and Euclidean boxes,
//! evolves the time-inhomogeneous semigroup `P_{s,t}`, and evaluates the
//! entropy functionals, functional inequalities, Harnack bounds and
//! curvature residuals attached to super Perelman Ricci flows, with
//! closed-form Ornstein-Uhlenbeck references as ground truth.
//!
//! All numerics are generic over the floating-point type through
//! [`scalar::Scalar`]; `f64` aliases for the main types are exported at the
//! crate root.

pub mod convergence;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod inequalities;
pub mod operators;
pub mod oracle;
pub mod scalar;

pub use error::{ModelError, Result};
pub use scalar::Scalar;

/// `f64` aliases for the commonly used types.
pub type Grid64 = grid::GridSpec<f64>;
pub type Scenario64 = geometry::FlowScenario<f64>;
pub type Measure64 = geometry::WeightedMeasure<f64>;
pub type Tensor64 = geometry::SymTensorField<f64>;
pub type Operator64 = operators::WittenOperator<f64>;
pub type Propagator64<'a> = operators::propagator::HeatPropagator<'a, f64>;
pub type Coefficients64 = entropy::EntropyCoefficients<f64>;
pub type Curve64 = entropy::EntropyCurve<f64>;
pub type Report64 = inequalities::InequalityReport<f64>;
