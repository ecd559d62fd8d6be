//! Offline end-to-end profile: bundled filings, stub providers, the
//! six-config demo matrix, deterministic timing.

use std::path::{Path, PathBuf};

use clap::Args;
use ragtrade::fixtures::{DEMO_CASSETTE_JSON, DEMO_CHUNK_SIZE, DEMO_CIKS, DEMO_OVERLAP, DEMO_TRIPLETS_JSONL, DEMO_USER_AGENT};
use ragtrade::index::Bm25Params;
use ragtrade::pipeline::matrix::demo_matrix_text;
use ragtrade::providers::ProviderConfig;
use serde_json::{json, Value};

use super::index::IndexArgs;
use super::ingest::IngestArgs;
use super::report::ReportArgs;
use super::run::{run_manifest, Overrides};
use super::create_dir;
use crate::error::CliError;
use crate::manifest::RunManifest;

pub const DEMO_RUN_ID: &str = "demo";

const DEMO_MANIFEST: &str = r#"run_id = "demo"
config_matrix_path = "matrix.tsv"
dataset_path = "triplets.jsonl"
index_path = "../index"
provider_config_path = "providers.toml"
seed = 7
created_at = "2024-07-01T00:00:00Z"

[timing]
mode = "simulated"
generation_seconds = 0.8
seconds_per_token = 0.002
retrieval_seconds = 0.05
"#;

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Working directory for fixtures, store, index and run outputs.
    #[arg(long, default_value = "ragtrade-demo")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Quality metric for the report. The extractive stub answers alike
    /// under every config, so retrieval quality is the informative axis.
    #[arg(long, default_value = "ndcg")]
    pub metric: String,
    /// Quality target for the objective query.
    #[arg(long, default_value_t = 0.85)]
    pub target: f64,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes the bundled inputs under `<out>/fixtures` and returns the manifest path.
pub fn write_fixtures(out: &Path) -> Result<PathBuf, CliError> {
    let dir = out.join("fixtures");
    create_dir(&dir)?;
    write(&dir.join("cassette.json"), DEMO_CASSETTE_JSON)?;
    write(&dir.join("triplets.jsonl"), DEMO_TRIPLETS_JSONL)?;
    write(&dir.join("matrix.tsv"), demo_matrix_text())?;
    let providers = toml::to_string_pretty(&ProviderConfig::stub_default()).expect("provider config serializes");
    write(&dir.join("providers.toml"), &providers)?;
    let manifest = dir.join("manifest.toml");
    write(&manifest, DEMO_MANIFEST)?;
    Ok(manifest)
}

pub fn execute(args: &DemoArgs) -> Result<Value, CliError> {
    let out = &args.out;
    let manifest_path = write_fixtures(out)?;
    let fixtures = out.join("fixtures");

    let ingest = super::ingest::execute(&IngestArgs {
        ciks: DEMO_CIKS.iter().map(|c| c.to_string()).collect(),
        forms: vec!["10-K".into(), "10-Q".into(), "8-K".into(), "DEF-14A".into()],
        limit: 10,
        store: out.join("store"),
        cassette: Some(fixtures.join("cassette.json")),
        record: None,
        edgar_config: None,
        user_agent: Some(DEMO_USER_AGENT.into()),
        events: Some(out.join("events.jsonl")),
    })?;
    let index = super::index::execute(&IndexArgs {
        store: out.join("store"),
        out: out.join("index"),
        providers: Some(fixtures.join("providers.toml")),
        chunk_size: DEMO_CHUNK_SIZE,
        overlap: DEMO_OVERLAP,
        k1: Bm25Params::default().k1,
        b: Bm25Params::default().b,
    })?;
    let manifest = RunManifest::load(&manifest_path)?;
    let run = run_manifest(manifest, &out.join("runs"), &Overrides { workers: Some(args.workers), ..Default::default() })?;
    let report = super::report::execute(&ReportArgs {
        run_dir: run.run_dir.clone(),
        metric: args.metric.clone(),
        target: Some(args.target),
        t_event: None,
        events: None,
        out: None,
    })?;
    Ok(json!({"ingest": ingest, "index": index, "run": run, "report": report}))
}
