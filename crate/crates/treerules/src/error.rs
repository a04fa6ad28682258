use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One violated configuration key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted path, e.g. `selection.max_rules_per_class`.
    pub key: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] treerules_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid configuration ({} issue(s))", .0.len())]
    Config(Vec<ConfigIssue>),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        Error::Format { path: path.into(), message: message.to_string() }
    }

    /// Short tag used in `error[<kind>]` lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "model",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Format { .. } => "format",
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
        }
    }

    /// Machine-parseable lines, one per problem: `error[kind]: message`.
    /// Configuration errors list every violated key.
    pub fn lines(&self) -> Vec<String> {
        match self {
            Error::Config(issues) => {
                issues.iter().map(|i| format!("error[config]: {}: {}", i.key, i.message)).collect()
            }
            other => vec![format!("error[{}]: {}", other.kind(), other.to_string().replace('\n', " "))],
        }
    }
}
