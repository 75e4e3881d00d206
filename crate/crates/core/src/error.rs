use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction or grid/function compatibility problems.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// An L^p exponent outside the range the requested operation supports.
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    /// Mismatched orders, grids or lengths between operands.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Non-finite or otherwise unusable numeric input.
    #[error("invalid value: {0}")]
    InvalidValue(String),

    /// A linear operator is singular to working tolerance. For the
    /// Neumann operators this signals a resonant linearization.
    #[error("singular operator: {0}")]
    SingularOperator(String),

    /// An iteration exhausted its budget without meeting its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A request that cannot be satisfied (e.g. a counterexample below
    /// the optimal constant).
    #[error("infeasible request: {0}")]
    Infeasible(String),

    /// File I/O.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV or JSON parsing/formatting problems.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
