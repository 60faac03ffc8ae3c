use crate::numeric::NumericError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("noise parameter v = {0} outside [{1}, 1]")]
    NoiseOutOfRange(String, i32),
    #[error("number of rounds {0} outside the supported range 1..={1}")]
    RoundsOutOfRange(usize, usize),
    #[error("round index {round} invalid for n = {n}")]
    InvalidRound { round: usize, n: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty factor list")]
    EmptyProduct,
    #[error("behavior violates the {scenario} constraints (row {row}, residual {residual})")]
    Infeasible { scenario: String, row: usize, residual: String },
    #[error("LP {0}")]
    Solver(String),
    #[error("certificate rejected: {0}")]
    Rejected(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
