use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel is singular at coincident points")]
    CoincidentPoints,

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}, tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("truncated integral did not settle: change {change:e} exceeds tolerance {tolerance:e}")]
    Truncation { change: f64, tolerance: f64 },

    #[error("grid: {0}")]
    Grid(String),

    #[error("kernel evaluation failed at node pair ({row}, {col}): {source}")]
    Assembly {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular value decomposition failed for {0}")]
    Svd(String),

    #[error("spectrum: {0}")]
    Spectrum(String),

    #[error("symbol: {0}")]
    Symbol(String),

    #[error("config field `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix file: {0}")]
    MatrixFormat(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
