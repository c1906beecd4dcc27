use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: invalid value in column `{column}`: {reason}")]
    InvalidValue { row: usize, column: String, reason: String },

    #[error("row {row}: stratum/missing/post-measure fields are inconsistent with the arm: {reason}")]
    InconsistentMissingness { row: usize, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("operation requires a time-to-event endpoint")]
    WrongEndpointKind,

    #[error("complete or quasi-complete separation: coefficient magnitude exceeded {limit}")]
    Separation { limit: f64 },

    #[error("information matrix is singular")]
    Singular,

    #[error("Newton iteration did not converge in {0} iterations")]
    NotConverged(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("stratum {0} has no treated subjects with observed status")]
    DegenerateStratum(usize),

    #[error("post-measure level {0} was not seen when fitting the weight models")]
    UnknownBLevel(i64),

    #[error("all case weights are zero")]
    AllZeroWeights,

    #[error("no events with positive weight")]
    NoEvents,

    #[error("partial likelihood is monotone: all weighted events fall in one group")]
    MonotoneLikelihood,

    #[error("pseudo-population for stratum {stratum} has zero total weight in the {arm} arm")]
    EmptyPseudoPopulation { stratum: usize, arm: &'static str },

    #[error("{failed} of {total} bootstrap replicates failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
