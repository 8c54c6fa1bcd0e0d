use thiserror::Error;

/// Failures of the experiment runner.
#[derive(Debug, Error)]
pub enum CliError {
    /// The config is not valid TOML or does not match the schema.
    #[error("cannot parse config: {0}")]
    Parse(String),

    /// Offending keys, each with the reason it was rejected.
    #[error("invalid config: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Solver {
        context: &'static str,
        #[source]
        source: transonic_core::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) | CliError::Usage(_) => 2,
            CliError::Solver { .. } | CliError::Io { .. } => 1,
        }
    }

    /// Offending keys of a validation failure (empty otherwise).
    pub fn offending_keys(&self) -> Vec<&str> {
        match self {
            CliError::Validation(items) => items.iter().map(|s| s.split(':').next().unwrap_or("").trim()).collect(),
            _ => Vec::new(),
        }
    }
}

/// Attaches a module name to solver errors.
pub trait Context<T> {
    fn context(self, context: &'static str) -> Result<T>;
}

impl<T> Context<T> for transonic_core::Result<T> {
    fn context(self, context: &'static str) -> Result<T> {
        self.map_err(|source| CliError::Solver { context, source })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
