use thiserror::Error;

/// Crate-wide error type. Variants group into three categories that the CLI
/// maps to process exit codes: configuration (2), data (3), numerical (4).
#[derive(Debug, Error)]
pub enum SdError {
    #[error("config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate observation for ({date}, {ticker})")]
    DuplicateKey { date: String, ticker: String },

    #[error("non-positive price {value} at line {line}")]
    NonPositivePrice { line: usize, value: f64 },

    #[error("no asset meets the coverage threshold; nothing to return")]
    AllAssetsDropped,

    #[error("panel too small: {0}")]
    PanelTooSmall(String),

    #[error("sample must hold at least two finite values")]
    BadSample,

    #[error("pooled range is degenerate (all values equal)")]
    DegenerateRange,

    #[error("test statistic undefined at every grid point")]
    AllPointsUndefined,

    #[error("matrix file invalid: {0}")]
    MatrixFormat(String),

    #[error("matrix failed symmetry validation at ({i}, {k}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, k: usize, a: f64, b: f64 },

    #[error("cluster count {k} out of range for {n} assets")]
    KOutOfRange { k: usize, n: usize },

    #[error("zero separation between cluster centers {i} and {k}")]
    ZeroSeparation { i: usize, k: usize },

    #[error("refinement produced an empty pool")]
    EmptyPool,

    #[error("pool of {have} assets cannot support draws of size {want}")]
    PoolTooSmall { have: usize, want: usize },

    #[error("market series has zero variance")]
    ZeroMarketVariance,

    #[error("covariance solve failed even with ridge fallback")]
    CovarianceSolve,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl SdError {
    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        use SdError::*;
        match self {
            Config(_) => 2,
            Parse { .. }
            | DuplicateKey { .. }
            | NonPositivePrice { .. }
            | AllAssetsDropped
            | PanelTooSmall(_)
            | BadSample
            | MatrixFormat(_)
            | AsymmetricMatrix { .. }
            | KOutOfRange { .. }
            | PoolTooSmall { .. }
            | EmptyPool
            | Io(_)
            | Csv(_)
            | Json(_) => 3,
            DegenerateRange
            | AllPointsUndefined
            | ZeroSeparation { .. }
            | ZeroMarketVariance
            | CovarianceSolve => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, SdError>;
