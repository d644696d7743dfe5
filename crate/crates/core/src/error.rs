use thiserror::Error;

/// Errors raised by the model, simulation, fitting and I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The inputs are valid individually but make the quantity undefined
    /// (for example a zero total rate).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A parameter record violates one of its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no intensity maximum inside [{lo}, {hi}] nm")]
    NoPeak { lo: f64, hi: f64 },

    /// The requested simulation would allocate more objects than allowed.
    #[error("resource limit: expected {expected:.3e} {what}, cap is {cap}")]
    Resource {
        what: &'static str,
        expected: f64,
        cap: usize,
    },

    #[error("lifetime {tau} ns is not below half the repetition period {period} ns")]
    WrapAround { tau: f64, period: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    /// Peak found on the boundary of the sampled range.
    #[error("maximum at the edge of the data range (thickness {thickness} nm)")]
    EdgePeak { thickness: f64 },

    /// Malformed tabular input; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
