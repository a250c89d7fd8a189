use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcdError {
    #[error("invalid density model: {0}")]
    InvalidModel(String),

    #[error("x = {x} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("observation {0} is not finite")]
    NonFiniteObservation(f64),

    #[error("sampling is not supported for model `{0}`")]
    SamplingUnsupported(String),

    #[error("KL divergence between `{p}` and `{q}` has no closed form; a sample count is required")]
    SamplesRequired { p: String, q: String },

    #[error("statistic increment {0} is not finite")]
    NonFiniteIncrement(f64),

    #[error("likelihood ratio {0} must be finite and non-negative")]
    InvalidRatio(f64),

    #[error("increment sequence is empty")]
    EmptySequence,

    #[error("horizon must be at least 1")]
    ZeroHorizon,

    #[error("threshold {0} must be finite and strictly positive")]
    InvalidThreshold(f64),

    #[error("models `{0}` and `{1}` are identical; f0, fC and fB must be pairwise distinct")]
    IdenticalModels(String, String),

    #[error("gamma = {0} must exceed 1")]
    InvalidGamma(f64),

    #[error("detector already raised an alarm at t = {0}")]
    DetectorStopped(u64),

    #[error("record set is empty")]
    EmptyRecords,

    #[error("record set mixes configurations: {0}")]
    MixedRecords(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("{0} list is empty")]
    EmptyList(&'static str),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for QcdError {
    fn from(err: std::io::Error) -> Self {
        QcdError::Io(err.to_string())
    }
}

impl From<csv::Error> for QcdError {
    fn from(err: csv::Error) -> Self {
        QcdError::Io(err.to_string())
    }
}

pub type Result<T, E = QcdError> = std::result::Result<T, E>;
