use thiserror::Error;

use crate::measures::MeasureKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("can't-solve mass is (numerically) 1; the conditional vector is undefined")]
    DegenerateCsMass,

    #[error("measure requires at least two proper categories")]
    SingleCategoryUnsupported,

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("index {index} out of range for {len} categories")]
    Index { index: usize, len: usize },

    #[error("shape mismatch: expected {expected} proper categories, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("no closed form is available for the {0} measure")]
    NoClosedForm(MeasureKind),

    #[error("sample is empty (no annotations)")]
    EmptySample,

    #[error("too many samples requested for enumeration: {0}")]
    TooLarge(String),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },

    #[error("row {row}: unknown label {label:?}")]
    UnknownLabel { row: usize, label: String },

    #[error("row {row}: malformed record: {msg}")]
    MalformedRow { row: usize, msg: String },

    #[error("input contains no records")]
    EmptyFile,

    #[error("missing field: {0}")]
    MissingField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
