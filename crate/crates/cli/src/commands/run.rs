//! Execute a configuration matrix over a dataset and score every config.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ragtrade::index::persist::load_index;
use ragtrade::metrics::{
    judgments_from_traces, score_run, write_reports_csv, write_reports_jsonl, EvalReport, ScoreContext,
};
use ragtrade::pipeline::{
    load_matrix, run_matrix, validate_all, PipelineEnv, RunLock, RunOptions, RunRecords, SimulatedCosts, TimingMode,
};
use serde::Serialize;
use serde_json::Value;

use super::dataset::load_dataset;
use super::{create_dir, load_prompts, load_providers, write_json};
use crate::error::{CliError, Problems};
use crate::manifest::RunManifest;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORTS_JSONL: &str = "eval_reports.jsonl";
pub const REPORTS_CSV: &str = "eval_reports.csv";
pub const SKIPPED_FILE: &str = "skipped_configs.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimingArg {
    /// Measured wall-clock time.
    Wall,
    /// Fixed cost per provider call; reproducible.
    Simulated,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run manifest (TOML, or JSON by extension).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Parent of run directories; the run lands in `<out>/<run_id>`.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub timing: Option<TimingArg>,
    /// Stop after this many new (config, question) pairs.
    #[arg(long, hide = true)]
    pub max_new_pairs: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub timing: Option<TimingMode>,
    pub max_new_pairs: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub configs: usize,
    pub reports: usize,
    pub executed: usize,
    pub resumed: usize,
    pub failed_pairs: usize,
    pub skipped: Vec<String>,
    pub interrupted: bool,
}

pub fn execute(args: &RunArgs) -> Result<Value, CliError> {
    let manifest = RunManifest::load(&args.manifest)?;
    let overrides = Overrides {
        workers: args.workers,
        seed: args.seed,
        timing: args.timing.map(|t| match t {
            TimingArg::Wall => TimingMode::Wall,
            TimingArg::Simulated => TimingMode::Simulated(SimulatedCosts::default()),
        }),
        max_new_pairs: args.max_new_pairs,
    };
    let summary = run_manifest(manifest, &args.out, &overrides)?;
    Ok(serde_json::to_value(summary).expect("summary serializes"))
}

/// The run directory records its manifest. Rerunning with the same inputs
/// resumes; reusing the run id for different inputs is refused. The worker
/// count does not affect results, so it is not part of the identity.
fn claim_run_dir(run_dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path = run_dir.join(MANIFEST_FILE);
    let identity = RunManifest { workers: None, ..manifest.clone() };
    if path.exists() {
        let raw = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let previous: RunManifest = serde_json::from_str(&raw)
            .map_err(|e| CliError::new(crate::error::ErrorKind::Integrity, format!("{}: {e}", path.display())))?;
        if previous != identity {
            return Err(CliError::validation(format!(
                "run_id {} is already used in {} with different inputs",
                manifest.run_id,
                run_dir.parent().unwrap_or(run_dir).display()
            )));
        }
        return Ok(());
    }
    write_json(&path, &identity)
}

pub fn run_manifest(mut manifest: RunManifest, out_root: &Path, ov: &Overrides) -> Result<RunSummary, CliError> {
    if let Some(s) = ov.seed {
        manifest.seed = s;
    }
    if let Some(t) = ov.timing {
        manifest.timing = Some(t);
    }
    if ov.workers == Some(0) {
        return Err(CliError::validation("--workers must be at least 1"));
    }

    // Everything is checked before anything runs, and all problems are reported together.
    let mut problems = Problems::default();
    manifest.check(&mut problems);
    let mut configs = if manifest.config_matrix_path.exists() {
        problems.take(load_matrix(&manifest.config_matrix_path)).unwrap_or_default()
    } else {
        Vec::new()
    };
    if let Err(e) = validate_all(&configs) {
        problems.push(e);
    }
    let index = if manifest.index_path.exists() { problems.take(load_index(&manifest.index_path)) } else { None };
    let known: Option<HashSet<String>> =
        index.as_ref().map(|(r, _, _)| r.chunks().into_iter().map(|c| c.chunk_id).collect());
    let triplets = if manifest.dataset_path.exists() {
        problems.take(load_dataset(&manifest.dataset_path, known.as_ref()))
    } else {
        None
    };
    if triplets.as_ref().is_some_and(Vec::is_empty) {
        problems.push(CliError::validation(format!("dataset {} is empty", manifest.dataset_path.display())));
    }
    let providers = match &manifest.provider_config_path {
        Some(p) if !p.exists() => None,
        p => problems.take(load_providers(p.as_deref())),
    };
    let prompts = match &manifest.prompts_dir {
        Some(d) if !d.exists() => None,
        d => problems.take(load_prompts(d.as_deref())),
    };
    problems.finish()?;
    let (retriever, _, load_outcome) = index.expect("checked");
    let providers = providers.expect("checked");
    let triplets = triplets.expect("checked");
    tracing::info!(outcome = ?load_outcome, chunks = retriever.len(), "index loaded");

    for c in &mut configs {
        c.seed = c.seed.wrapping_add(manifest.seed);
    }

    let run_dir = out_root.join(&manifest.run_id);
    create_dir(&run_dir)?;
    let _lock = RunLock::acquire(&run_dir)?;
    claim_run_dir(&run_dir, &manifest)?;
    let records = RunRecords::open(&run_dir)?;

    let env = PipelineEnv { prompts: prompts.expect("checked"), timing: manifest.timing.unwrap_or_default(), ..Default::default() };
    let opts = RunOptions {
        workers: ov.workers.or(manifest.workers).unwrap_or(1),
        env: env.clone(),
        max_new_pairs: ov.max_new_pairs,
    };
    let outcome = run_matrix(&configs, &triplets, &retriever, &providers, &opts, Some(&records))?;

    let mut summary = RunSummary {
        run_dir: run_dir.clone(),
        configs: configs.len(),
        reports: 0,
        executed: outcome.runs.iter().map(|r| r.executed).sum(),
        resumed: outcome.runs.iter().map(|r| r.resumed).sum(),
        failed_pairs: outcome.runs.iter().map(|r| r.failed).sum(),
        skipped: outcome.skipped.iter().map(|s| s.config_id.clone()).collect(),
        interrupted: outcome.interrupted,
    };
    if outcome.interrupted {
        tracing::warn!("run stopped early; rerun the same manifest to resume");
        return Ok(summary);
    }

    let similarity = providers.base_embedder()?;
    let locate = |passage: &str| retriever.locate_passage(passage);
    let mut reports: Vec<EvalReport> = Vec::with_capacity(outcome.runs.len());
    for run in &outcome.runs {
        let judgments = judgments_from_traces(&run.traces, &triplets, &locate);
        let ctx = ScoreContext {
            config_id: &run.config.config_id,
            techniques: run.config.techniques().into_iter().map(String::from).collect(),
            alpha: run.config.alpha,
            k: run.config.k,
            embedding_model: &run.models.embedding.name,
            generation_model: &run.models.generation.name,
            prep_overhead_seconds: run.prep_overhead_seconds,
            similarity: similarity.as_ref(),
            detector: &env.detector,
        };
        reports.push(score_run(&run.traces, &triplets, &judgments, &ctx)?);
    }
    let jsonl = run_dir.join(REPORTS_JSONL);
    write_reports_jsonl(&jsonl, &reports).map_err(|e| CliError::io(&jsonl, e))?;
    let csv = run_dir.join(REPORTS_CSV);
    write_reports_csv(&csv, &reports).map_err(|e| CliError::io(&csv, e))?;
    write_json(&run_dir.join(SKIPPED_FILE), &outcome.skipped)?;
    summary.reports = reports.len();
    Ok(summary)
}
