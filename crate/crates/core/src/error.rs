use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian (max |m - m^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("angular grid too coarse: n_theta = {0}")]
    GridTooCoarse(usize),

    #[error("angular window too narrow: delta-marginal at the edge is {0:e} of its peak")]
    WindowTooNarrow(f64),

    #[error("degenerate angular variance ({0:e} rad^2)")]
    DegenerateVariance(f64),

    #[error("both coincidence probabilities vanish")]
    DegenerateDenominator,

    #[error("distribution is not symmetric under signal/idler exchange (deviation {0:e})")]
    Asymmetric(f64),

    #[error("{field} = {value} is out of range: {reason}")]
    OutOfRange {
        field: String,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid evolution grid: {0}")]
    InvalidEvolution(&'static str),

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("duplicate scenario id `{0}`")]
    DuplicateScenario(String),

    #[error("unknown output format `{0}`")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn out_of_range(field: impl Into<String>, value: f64, reason: &'static str) -> Self {
        Error::OutOfRange {
            field: field.into(),
            value,
            reason,
        }
    }
}
