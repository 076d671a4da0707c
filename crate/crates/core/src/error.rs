use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("invalid povm: {0}")]
    InvalidPovm(String),

    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),

    #[error("decomposition does not reproduce the target measurement (deviation {0:.3e})")]
    DecompositionMismatch(f64),

    #[error("size cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty typical set")]
    EmptyTypicalSet,

    #[error("unknown outcome label `{0}`")]
    UnknownLabel(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("cannot write output: {0}")]
    Output(String),
}

impl Error {
    /// True for errors caused by the caps on enumeration or operator size.
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
