use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group point: {0}")]
    InvalidPoint(String),

    #[error("invalid kernel parameter: {0}")]
    InvalidParam(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(
        "quadrature did not reach tolerance {tolerance:e} after {refinements} refinements \
         (estimate {estimate:e}, value {value}): {context}"
    )]
    Numerical {
        value: f64,
        estimate: f64,
        tolerance: f64,
        refinements: usize,
        context: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
