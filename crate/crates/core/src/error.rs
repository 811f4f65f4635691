use thiserror::Error;

/// Errors raised by the tensoray library.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or ray lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Grid sizes, truncation levels or tolerances are inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two arrays that must share a grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Evaluation point too close to the boundary for the Cauchy-type kernels.
    #[error("point at distance {distance:.3e} from the boundary is inside the margin {margin:.3e}")]
    Margin { distance: f64, margin: f64 },

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
