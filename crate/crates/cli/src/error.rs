//! Error categories and their process exit codes.

use std::fmt;
use std::path::Path;

use ragtrade::corpus::CorpusError;
use ragtrade::dataset::DatasetError;
use ragtrade::http::TransportError;
use ragtrade::index::IndexError;
use ragtrade::metrics::MetricsError;
use ragtrade::pipeline::PipelineError;
use ragtrade::providers::ProviderError;
use ragtrade::tradespace::TradespaceError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Bad arguments, manifests, matrices or configs. Exit 2.
    Validation,
    /// A model endpoint or remote data source failed. Exit 3.
    Provider,
    /// Stored data is corrupt, malformed or inconsistent. Exit 4.
    Integrity,
    /// Local filesystem trouble. Exit 1.
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Provider => 3,
            ErrorKind::Integrity => 4,
            ErrorKind::Io => 1,
        }
    }
}

/// A failed command: one category plus every message collected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub errors: Vec<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, errors: vec![message.into()] }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Io, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// One-line JSON for stderr.
    pub fn summary(&self) -> String {
        serde_json::json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "errors": self.errors,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.errors.join("; "))
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let kind = match &e {
            CorpusError::InvalidArgument(_) | CorpusError::UnsupportedForm(_) => ErrorKind::Validation,
            CorpusError::Transport { .. } | CorpusError::RateLimited { .. } | CorpusError::Parse { .. } => {
                ErrorKind::Provider
            }
            CorpusError::Integrity { .. } | CorpusError::NotFound(_) => ErrorKind::Integrity,
            CorpusError::Io { .. } => ErrorKind::Io,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        Self::new(ErrorKind::Provider, e.to_string())
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        let kind = match &e {
            ProviderError::Config(_) => ErrorKind::Validation,
            _ => ErrorKind::Provider,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Provider(p) => p.into(),
            IndexError::Corrupt { .. } => Self::new(ErrorKind::Integrity, e.to_string()),
            IndexError::Io { .. } => Self::new(ErrorKind::Io, e.to_string()),
            _ => Self::new(ErrorKind::Validation, e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let kind = match &e {
            DatasetError::InvalidArgument(_) => ErrorKind::Validation,
            DatasetError::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Integrity,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidConfig { config_id, problems } => Self {
                kind: ErrorKind::Validation,
                errors: problems.into_iter().map(|p| format!("{config_id}: {p}")).collect(),
            },
            PipelineError::InvalidMatrix { problems } => Self { kind: ErrorKind::Validation, errors: problems },
            PipelineError::Provider(p) => p.into(),
            PipelineError::Index(i) => i.into(),
            PipelineError::Record { .. } => Self::new(ErrorKind::Integrity, e.to_string()),
            PipelineError::Io { .. } => Self::new(ErrorKind::Io, e.to_string()),
            _ => Self::new(ErrorKind::Validation, e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Provider(p) => p.into(),
            MetricsError::InvalidArgument(_) => Self::new(ErrorKind::Integrity, e.to_string()),
        }
    }
}

impl From<TradespaceError> for CliError {
    fn from(e: TradespaceError) -> Self {
        let kind = match &e {
            TradespaceError::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        };
        Self::new(kind, e.to_string())
    }
}

/// Gathers errors from independent checks so all can be reported at once.
#[derive(Debug, Default)]
pub struct Problems(Vec<CliError>);

impl Problems {
    pub fn push(&mut self, e: impl Into<CliError>) {
        self.0.push(e.into());
    }

    pub fn take<T, E: Into<CliError>>(&mut self, r: Result<T, E>) -> Option<T> {
        r.map_err(|e| self.push(e)).ok()
    }

    /// Fails with every collected message. The most severe category wins,
    /// validation first, since nothing has been executed yet.
    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            return Ok(());
        }
        let order = [ErrorKind::Validation, ErrorKind::Integrity, ErrorKind::Provider, ErrorKind::Io];
        let kind = order.into_iter().find(|k| self.0.iter().any(|e| e.kind == *k)).expect("non-empty");
        Err(CliError { kind, errors: self.0.into_iter().flat_map(|e| e.errors).collect() })
    }
}
