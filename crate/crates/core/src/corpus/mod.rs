//! Filing ingest: fetch, normalize, chunk, store, and timed arrival.

pub mod chunk;
pub mod edgar;
pub mod events;
pub mod normalize;
pub mod store;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunk::{chunk_filing, read_chunks_jsonl, write_chunks_jsonl, Chunk, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
pub use edgar::{EdgarClient, EdgarConfig};
pub use events::{simulate_event_stream, IngestEvent, IngestOutcome};
pub use normalize::normalize_html;
pub use store::{FilingStore, StoreFilter};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("integrity error in {file}: {reason}")]
    Integrity { file: String, reason: String },
    #[error("unsupported form type {0:?}")]
    UnsupportedForm(String),
    #[error("request to {url} failed after {attempts} attempt(s): {message}")]
    Transport { url: String, attempts: u32, message: String },
    #[error("rate limited by {url} after {attempts} attempt(s)")]
    RateLimited { url: String, attempts: u32 },
    #[error("malformed response from {url}: {message}")]
    Parse { url: String, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, CorpusError::Transport { .. } | CorpusError::RateLimited { .. })
    }
}

/// The four disclosure types the corpus accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormType {
    #[serde(rename = "10-K")]
    TenK,
    #[serde(rename = "10-Q")]
    TenQ,
    #[serde(rename = "8-K")]
    EightK,
    #[serde(rename = "DEF-14A")]
    Def14A,
}

impl FormType {
    pub const ALL: [FormType; 4] = [FormType::TenK, FormType::TenQ, FormType::EightK, FormType::Def14A];

    pub fn as_str(self) -> &'static str {
        match self {
            FormType::TenK => "10-K",
            FormType::TenQ => "10-Q",
            FormType::EightK => "8-K",
            FormType::Def14A => "DEF-14A",
        }
    }
}

impl fmt::Display for FormType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormType {
    type Err = CorpusError;

    /// Accepts the registry spelling `DEF 14A` as well as `DEF-14A`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.trim().to_ascii_uppercase().chars().filter(|c| !c.is_whitespace() && *c != '-').collect();
        match key.as_str() {
            "10K" => Ok(FormType::TenK),
            "10Q" => Ok(FormType::TenQ),
            "8K" => Ok(FormType::EightK),
            "DEF14A" => Ok(FormType::Def14A),
            _ => Err(CorpusError::UnsupportedForm(s.to_string())),
        }
    }
}

/// Company registry number. Displays zero-padded to ten digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cik(pub u64);

impl Cik {
    pub fn padded(self) -> String {
        format!("{:010}", self.0)
    }
}

impl fmt::Display for Cik {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Cik {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.trim().trim_start_matches("CIK");
        digits
            .parse::<u64>()
            .ok()
            .filter(|n| *n < 10_000_000_000)
            .map(Cik)
            .ok_or_else(|| CorpusError::InvalidArgument(format!("not a CIK: {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filing {
    pub accession_id: String,
    pub cik: Cik,
    pub company: String,
    pub form_type: FormType,
    pub filed_at: DateTime<Utc>,
    pub raw_text: String,
    pub source_url: String,
}

impl Filing {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let ok = !self.accession_id.is_empty()
            && self
                .accession_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.accession_id.starts_with('.');
        if !ok {
            return Err(CorpusError::InvalidArgument(format!(
                "accession id {:?} must be non-empty and use [A-Za-z0-9._-]",
                self.accession_id
            )));
        }
        if normalize_html(&self.raw_text) != self.raw_text {
            return Err(CorpusError::InvalidArgument(format!(
                "filing {} text is not normalized plain text",
                self.accession_id
            )));
        }
        Ok(())
    }
}
