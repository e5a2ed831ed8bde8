use thiserror::Error;

/// Errors produced anywhere in the identification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A mathematically undefined request (e.g. poles of a constant).
    #[error("domain error: {0}")]
    Domain(String),

    /// The partial-fraction machinery only supports simple poles.
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),

    /// A pole sits inside the ambiguity band around the split threshold.
    #[error("ambiguous split: pole magnitude {magnitude} is within 5% of threshold {threshold}")]
    AmbiguousSplit { magnitude: f64, threshold: f64 },

    /// The data do not carry enough excitation or samples to fit the model.
    #[error("not identifiable: {0}")]
    Identifiability(String),

    /// Disturbance calibration needs a reference with nonzero variance.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Invalid configuration (bandwidths, orders, scenario parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// A stage of a multi-stage method failed.
    #[error("stage '{stage}' failed: {reason}")]
    Stage { stage: String, reason: String },

    /// Malformed input file; `line` is 1-based when known.
    #[error("input error at line {line}: {message}")]
    Input { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "argument",
            Error::Domain(_) => "domain",
            Error::UnsupportedStructure(_) => "unsupported",
            Error::AmbiguousSplit { .. } => "ambiguous-split",
            Error::Identifiability(_) => "identifiability",
            Error::Calibration(_) => "calibration",
            Error::Config(_) => "config",
            Error::Stage { .. } => "stage",
            Error::Input { .. } => "input",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
