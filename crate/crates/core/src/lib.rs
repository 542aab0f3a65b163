//! Double shrinkage of the global minimum variance portfolio.
//!
//! The sample covariance is ridge-regularized, `S_λ = λS_n + (1 − λ)I`, and
//! the resulting portfolio is shrunk linearly toward a target `b`:
//! `w = ψ ŵ_{S_λ} + (1 − ψ)b`. Both intensities are chosen by maximizing a
//! consistent (bona fide) estimator of the out-of-sample loss derived from
//! random matrix theory.
//!
//! The math is generic over [`Scalar`] (`f32`/`f64`); the simulation and
//! backtest modules work in `f64`. Concrete `f64` aliases are exported at
//! the crate root.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod portfolio;
pub mod rmt;
pub mod scalar;
pub mod simulate;
pub mod targets;

pub use error::{Result, ShrinkError};
pub use estimator::{
    BonaFide, FitOptions, LossQuadratic, OracleProblem, ShrinkageProblem, ShrinkageSolution,
};
pub use portfolio::{CovarianceEstimate, CovarianceKind, PortfolioWeights, ReturnPanel};
pub use rmt::{OracleFunctionals, RmtFunctionals};
pub use scalar::Scalar;
pub use targets::{StrategyKind, StrategySpec, TargetSpec};

pub type Panel = ReturnPanel<f64>;
pub type Covariance = CovarianceEstimate<f64>;
pub type Weights = PortfolioWeights<f64>;
pub type Problem = ShrinkageProblem<f64>;
pub type Solution = ShrinkageSolution<f64>;
pub type Target = TargetSpec<f64>;
pub type Strategy = StrategySpec<f64>;
