use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter {value} is outside the domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("derivative order {order} exceeds spline degree {degree}")]
    InvalidOrder { order: usize, degree: usize },

    #[error("index {index} out of range (size {size})")]
    Index { index: usize, size: usize },

    #[error(
        "normal matrix is numerically singular at control point {column}; \
         the data leave some control points unconstrained, use a regularization threshold s* > 0"
    )]
    RankDeficient { column: usize },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("point generation failed: {0}")]
    Generation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
