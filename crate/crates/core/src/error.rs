use std::io;

/// Errors produced by the simulator and the analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A pivot of the LQ factorization fell below the rank tolerance.
    #[error("degenerate channel: pivot {index} has magnitude {magnitude:e} below tolerance {tolerance:e}")]
    DegenerateChannel {
        index: usize,
        magnitude: f64,
        tolerance: f64,
    },
    /// Matrix or vector shapes do not fit the operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("codebook is empty")]
    EmptyCodebook,
    #[error("codebook with {bits} bits exceeds the limit of {limit} bits")]
    CodebookTooLarge { bits: u32, limit: u32 },
    /// Invalid experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed text input (config file, grid or list string, CSV).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
