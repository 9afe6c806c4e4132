//! CLI error type and its mapping to process exit codes.

use std::path::PathBuf;

/// Errors surfaced by the command-line frontend.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Flag combinations or values that do not form a runnable experiment.
    #[error("configuration error: {0}")]
    Config(String),

    /// File system failures, with the offending path.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data (CSV structure, unparsable fields).
    #[error("{context}: {message}")]
    Data { context: String, message: String },

    /// Errors bubbled up from the computation library.
    #[error(transparent)]
    Lib(#[from] sigmmd::Error),
}

impl CliError {
    pub(crate) fn data(context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Data {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration and input problems, 3 when a
    /// numerical procedure failed on valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_separate_config_from_numerical_failures() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::data("f.csv", "bad row").exit_code(), 2);
        let invalid = sigmmd::Error::InvalidArgument("bad".into());
        assert_eq!(CliError::Lib(invalid).exit_code(), 2);
        let numerical = sigmmd::Error::Numerical("nan".into());
        assert_eq!(CliError::Lib(numerical).exit_code(), 3);
        let root = sigmmd::Error::RootFinding {
            lo: 0.0,
            hi: 1.0,
            max_iter: 100,
        };
        assert_eq!(CliError::Lib(root).exit_code(), 3);
    }
}
