use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("label column '{0}' not found")]
    MissingLabelColumn(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k = {k} out of range (valid: {min}..={max})")]
    KOutOfRange { k: usize, min: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown generator '{0}' (valid: gaussian, uniform_box, uniform_ball, circle, point_mass)")]
    UnknownGenerator(String),

    #[error("unknown scenario '{0}' (valid: ring, local, clustered, shrinking_separation)")]
    UnknownScenario(String),

    #[error("requires m > ε (m = {m}, ε = {epsilon})")]
    MassNotAboveContamination { m: f64, epsilon: f64 },

    #[error("separation too small for this buffer: {0}")]
    SeparationTooSmall(String),

    #[error("labels required")]
    LabelsRequired,

    #[error("both classes required (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: usize, negatives: usize },

    #[error("no nonzero differences")]
    NoNonzeroDifferences,

    #[error("too few nonzero differences: {found} (need at least {required})")]
    TooFewDifferences { found: usize, required: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
