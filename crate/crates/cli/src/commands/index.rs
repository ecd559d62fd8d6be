//! Chunk stored filings and build the persisted sparse and dense indexes.

use std::path::PathBuf;

use clap::Args;
use ragtrade::corpus::{chunk_filing, FilingStore, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
use ragtrade::index::persist::save_index;
use ragtrade::index::{Bm25Params, Retriever};
use serde_json::{json, Value};

use super::load_providers;
use crate::error::CliError;

#[derive(Debug, Clone, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Index directory to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Provider file; the base embedding model builds the dense index.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Chunk window in whitespace tokens.
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    pub overlap: usize,
    #[arg(long, default_value_t = Bm25Params::default().k1)]
    pub k1: f64,
    #[arg(long, default_value_t = Bm25Params::default().b)]
    pub b: f64,
}

pub fn execute(args: &IndexArgs) -> Result<Value, CliError> {
    if !args.store.is_dir() {
        return Err(CliError::validation(format!("store {} does not exist", args.store.display())));
    }
    let providers = load_providers(args.providers.as_deref())?;
    let embedder = providers.base_embedder()?;
    let store = FilingStore::open(&args.store)?;
    let filings = store.all()?;
    let mut chunks = Vec::new();
    for f in &filings {
        chunks.extend(chunk_filing(f, args.chunk_size, args.overlap)?);
    }
    let retriever = Retriever::new(Bm25Params { k1: args.k1, b: args.b });
    retriever.index_add(&chunks, embedder.as_ref())?;
    let manifest = save_index(&args.out, &retriever, embedder.as_ref())?;
    tracing::info!(filings = filings.len(), chunks = chunks.len(), "index written");
    Ok(json!({
        "filings": filings.len(),
        "chunks": chunks.len(),
        "index": args.out,
        "manifest": manifest,
    }))
}
