use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("vertex index {index} out of bounds for {n} vertices")]
    IndexOutOfBounds { index: usize, n: usize },

    #[error("isolated vertex {0}")]
    IsolatedVertex(usize),

    #[error("isolated source {0}")]
    IsolatedSource(usize),

    #[error("zero degree at vertex {0}")]
    ZeroDegree(usize),

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("disconnected: spectral gap lambda_1 = {lambda1:e} is not positive (spectral_gap)")]
    Disconnected { lambda1: f64 },

    #[error("unstable symbol: mode {mode} grows by exp({growth:.3}) over the horizon")]
    UnstableSymbol { mode: usize, growth: f64 },

    #[error("empty support: sampling region has no admissible points")]
    EmptySupport,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end: 2 for validation
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Disconnected { .. } | Error::UnstableSymbol { .. } | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
