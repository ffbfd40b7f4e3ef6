use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("vector norm {0:e} is too small to normalize")]
    DegenerateVector(f64),

    #[error("amplitudes are not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("non-finite amplitude")]
    NonFinite,

    #[error("perturbation with beta = {beta} produced a degenerate state")]
    DegeneratePerturbation { beta: f64 },

    #[error("estimate update produced a degenerate state")]
    DegenerateUpdate,

    #[error("invalid gain {0}: must be positive and finite")]
    InvalidGain(f64),

    #[error("invalid value {value} for {name}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("inconsistent lengths: {0}")]
    LengthMismatch(String),

    #[error("all counts are zero, nothing to reconstruct")]
    NoSignal,

    #[error("projector set is not informationally complete (operator rank {rank} < {required})")]
    NotInformationallyComplete { rank: usize, required: usize },

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("measurement failed at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },
}
