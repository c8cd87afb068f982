//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Distribution has zero variance or otherwise collapses.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    /// No saddlepoint exists for the requested target.
    #[error("no saddlepoint: {0}")]
    NoSaddlepoint(String),

    /// Iterative solver ran out of iterations.
    #[error("did not converge: {0}")]
    NoConvergence(String),

    /// Perfect or quasi-perfect separation in a binary-response fit.
    #[error("perfect separation detected: {0}")]
    Separation(String),

    /// Information matrix not invertible / not positive definite.
    #[error("singular information matrix: {0}")]
    Singular(String),

    /// The two fits handed to a higher-order correction are inconsistent.
    #[error("inconsistent fits: {0}")]
    FitInconsistency(String),

    /// Configuration file problems (schema, version, missing sections).
    #[error("config error: {0}")]
    Config(String),

    /// Grids of two curves do not match.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
