use thiserror::Error;

/// Errors raised by the estimator and its building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShrinkError {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular covariance matrix: {0}")]
    SingularCovariance(String),
    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),
    #[error("degenerate random-matrix kernel: {0}")]
    KernelDegenerate(String),
    #[error("fixed-point solver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("bona fide loss is degenerate: {0}")]
    LossDegenerate(String),
    #[error("optimization failed: {0}")]
    OptimizationFailure(String),
}

pub type Result<T> = std::result::Result<T, ShrinkError>;
