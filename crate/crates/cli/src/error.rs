use acstab_core::Error as CoreError;
use thiserror::Error;

/// Failures of a command run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 check failure, 2 config (and IO) error, 3 numeric error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Config { .. } | CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::SingularPoint(_)
                | CoreError::NotHerglotz { .. }
                | CoreError::Numeric { .. }
                | CoreError::SingularJunction(_) => 3,
                _ => 2,
            },
        }
    }
}
