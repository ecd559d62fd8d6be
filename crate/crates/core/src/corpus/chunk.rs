use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Filing};
use crate::text::whitespace_tokens;

pub const DEFAULT_CHUNK_SIZE: usize = 512;
pub const DEFAULT_OVERLAP: usize = 64;

/// A retrievable window of a filing, in whitespace-token offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub text: String,
    pub token_span: (usize, usize),
    pub filing_ref: String,
    pub filed_at: DateTime<Utc>,
}

pub fn chunk_id(accession_id: &str, ordinal: usize) -> String {
    format!("{accession_id}:{ordinal:05}")
}

/// Sliding-window spans: each window starts `chunk_size - overlap` tokens
/// after the previous one; the last window is cut at the end of the text.
pub fn window_spans(n_tokens: usize, chunk_size: usize, overlap: usize) -> Result<Vec<(usize, usize)>, CorpusError> {
    if overlap >= chunk_size {
        return Err(CorpusError::InvalidArgument(format!(
            "overlap ({overlap}) must be smaller than chunk size ({chunk_size})"
        )));
    }
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n_tokens {
        let end = (start + chunk_size).min(n_tokens);
        spans.push((start, end));
        if end == n_tokens {
            break;
        }
        start += chunk_size - overlap;
    }
    Ok(spans)
}

pub fn chunk_filing(filing: &Filing, chunk_size: usize, overlap: usize) -> Result<Vec<Chunk>, CorpusError> {
    let tokens = whitespace_tokens(&filing.raw_text);
    let spans = window_spans(tokens.len(), chunk_size, overlap)?;
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(ordinal, (start, end))| Chunk {
            chunk_id: chunk_id(&filing.accession_id, ordinal),
            text: tokens[start..end].join(" "),
            token_span: (start, end),
            filing_ref: filing.accession_id.clone(),
            filed_at: filing.filed_at,
        })
        .collect())
}

/// Writes the chunk export consumed by the index builder, one record per line.
pub fn write_chunks_jsonl(path: &Path, chunks: &[Chunk]) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in chunks {
        let line = serde_json::to_string(c).expect("chunk serializes");
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

pub fn read_chunks_jsonl(path: &Path) -> Result<Vec<Chunk>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let chunk: Chunk = serde_json::from_str(&line).map_err(|e| CorpusError::Integrity {
            file: path.display().to_string(),
            reason: format!("line {}: {e}", i + 1),
        })?;
        out.push(chunk);
    }
    Ok(out)
}
