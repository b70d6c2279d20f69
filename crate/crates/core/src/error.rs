use thiserror::Error;

#[derive(Debug, Error)]
pub enum VpbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unphysical state: {0}")]
    Unphysical(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("did not converge after {iterations} iterations (residual {residual:e}): {context}")]
    NoConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },
    #[error("collision mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("stability bound violated: {0}")]
    Stability(String),
    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VpbError>;
