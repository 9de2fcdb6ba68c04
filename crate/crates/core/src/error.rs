use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tolerance {name}: {value} (must be strictly positive)")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("ragged matrix: row {row} has {len} entries, expected {expected}")]
    RaggedMatrix { row: usize, len: usize, expected: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("matrix is not deterministic: entry {value} at ({row}, {col}) is neither 0 nor 1")]
    NotDeterministic { row: usize, col: usize, value: f64 },

    #[error("reduced deterministic matrix is not a permuted identity")]
    NotPermutation,

    #[error("invalid size {0}: need n >= 2")]
    InvalidSize(usize),

    #[error("unknown matrix name {0:?} (expected NOT, XOR or AMBIG3)")]
    UnknownName(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("integer overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("W*H is not row-stochastic: {0}")]
    NotStochasticProduct(String),

    #[error("no nonnegative factorization reached the target residual (best {best_residual:e})")]
    NmfFailed { best_residual: f64 },

    #[error("no inner dimension in [{lo}, {hi}] produced a factorization")]
    NotFound { lo: usize, hi: usize },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid range {lo}..{hi}")]
    InvalidRange { lo: usize, hi: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
