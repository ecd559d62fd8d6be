pub mod dataset;
pub mod demo;
pub mod index;
pub mod ingest;
pub mod report;
pub mod run;

use std::path::Path;

use ragtrade::prompts::Prompts;
use ragtrade::providers::{ProviderConfig, ProviderSet};
use serde::Serialize;

use crate::error::CliError;

/// The configured providers, or the built-in stubs when no file is given.
pub fn load_providers(path: Option<&Path>) -> Result<ProviderSet, CliError> {
    let cfg = match path {
        Some(p) => ProviderConfig::load(p)?,
        None => ProviderConfig::stub_default(),
    };
    Ok(ProviderSet::from_config(&cfg)?)
}

pub fn load_prompts(dir: Option<&Path>) -> Result<Prompts, CliError> {
    match dir {
        Some(d) => Prompts::with_overrides(d).map_err(|e| CliError::validation(format!("{}: {e}", d.display()))),
        None => Ok(Prompts::builtin()),
    }
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| CliError::io(path, e))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
