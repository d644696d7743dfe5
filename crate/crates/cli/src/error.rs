use std::fmt;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    pub fn not_converged(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NOT_CONVERGED,
            message: message.into(),
        }
    }

    /// Error raised while interpreting the named input file.
    pub fn input(path: &std::path::Path, e: dap_layer::Error) -> Self {
        let mut err = Self::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Malformed input and invalid parameters are configuration errors; every
/// other library failure happens at run time.
impl From<dap_layer::Error> for CliError {
    fn from(e: dap_layer::Error) -> Self {
        use dap_layer::Error as E;
        match e {
            E::Parse { .. } | E::InvalidParams(_) => Self::config(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
