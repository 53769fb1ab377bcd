use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model/parameter pairing that the model does not estimate.
    #[error("{kind} model has no {target} estimator")]
    Inadmissible { kind: String, target: String },

    /// A closed form produced a non-finite or non-positive denominator.
    #[error("numeric degeneracy in {what} at n={n}, lambda={lambda}: {detail}")]
    NumericDegeneracy {
        what: &'static str,
        n: u64,
        lambda: f64,
        detail: String,
    },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("target {target} is outside the fitted range [{lo:.4}, {hi:.4}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    /// The fitted curve crosses the target more than once, so no unique
    /// threshold exists.
    #[error("fit is not monotone over its domain: {0}")]
    NonMonotone(String),

    #[error("target ratio {0} is unattainable")]
    Unattainable(f64),

    #[error("sample size search exceeded the cap of {0}")]
    Overflow(u64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
