//! QA dataset checks, synthesis, and human assessment import.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use ragtrade::dataset::{
    aggregate_assessments, import_assessments, load_triplets, synthesize_triplets, write_assessment_summary,
    write_triplets, Provenance, QATriplet, Tag,
};
use ragtrade::index::persist::load_index;
use ragtrade::pipeline::load_matrix;
use serde_json::{json, Value};

use super::{load_prompts, load_providers};
use crate::error::{CliError, ErrorKind};

#[derive(Debug, Clone, Subcommand)]
pub enum DatasetCommand {
    /// Check a triplet file, optionally against an index's chunk ids.
    Validate(ValidateArgs),
    /// Generate question/answer pairs from sampled index chunks.
    Synthesize(SynthesizeArgs),
    /// Import a human assessment CSV and write per-config rates.
    Assessments(AssessmentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub providers: Option<PathBuf>,
    #[arg(long)]
    pub prompts_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AssessmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Triplet file whose ids the rows must reference.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Matrix whose config ids the rows must reference.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Fail when any row was rejected.
    #[arg(long)]
    pub strict: bool,
}

/// Loads triplets, prefixing errors with the file name.
pub fn load_dataset(path: &Path, known_chunks: Option<&HashSet<String>>) -> Result<Vec<QATriplet>, CliError> {
    load_triplets(path, known_chunks).map_err(|e| {
        let mut err = CliError::from(e);
        err.errors = err.errors.into_iter().map(|m| format!("{}: {m}", path.display())).collect();
        err
    })
}

pub fn execute(cmd: &DatasetCommand) -> Result<Value, CliError> {
    match cmd {
        DatasetCommand::Validate(a) => validate(a),
        DatasetCommand::Synthesize(a) => synthesize(a),
        DatasetCommand::Assessments(a) => assessments(a),
    }
}

fn validate(args: &ValidateArgs) -> Result<Value, CliError> {
    let known = match &args.index {
        Some(dir) => Some(load_index(dir)?.0.chunks().into_iter().map(|c| c.chunk_id).collect::<HashSet<_>>()),
        None => None,
    };
    let triplets = load_dataset(&args.dataset, known.as_ref())?;
    let count = |p: &dyn Fn(&QATriplet) -> bool| triplets.iter().filter(|t| p(t)).count();
    Ok(json!({
        "triplets": triplets.len(),
        "human": count(&|t| t.provenance == Provenance::Human),
        "synthetic": count(&|t| t.provenance == Provenance::Synthetic),
        "complex": count(&|t| t.tags.contains(&Tag::Complex)),
        "important": count(&|t| t.tags.contains(&Tag::Important)),
    }))
}

fn synthesize(args: &SynthesizeArgs) -> Result<Value, CliError> {
    if args.n == 0 {
        return Err(CliError::validation("--n must be at least 1"));
    }
    let (retriever, _, _) = load_index(&args.index)?;
    let providers = load_providers(args.providers.as_deref())?;
    let prompts = load_prompts(args.prompts_dir.as_deref())?;
    let generator = providers.resolve(false, false)?.generator;
    let synth = synthesize_triplets(&retriever.chunks(), args.n, generator.as_ref(), &prompts, args.seed)?;
    write_triplets(&args.out, &synth.triplets)?;
    Ok(json!({"written": synth.triplets.len(), "malformed": synth.malformed, "out": args.out}))
}

fn assessments(args: &AssessmentArgs) -> Result<Value, CliError> {
    let questions = match &args.dataset {
        Some(p) => Some(load_dataset(p, None)?.into_iter().map(|t| t.id).collect::<HashSet<_>>()),
        None => None,
    };
    let configs = match &args.matrix {
        Some(p) => Some(load_matrix(p)?.into_iter().map(|c| c.config_id).collect::<HashSet<_>>()),
        None => None,
    };
    let import = import_assessments(&args.input, questions.as_ref(), configs.as_ref())?;
    let rejected: Vec<String> = import.errors.iter().map(|e| format!("line {}: {}", e.line, e.message)).collect();
    if args.strict && !rejected.is_empty() {
        return Err(CliError { kind: ErrorKind::Integrity, errors: rejected });
    }
    let summary = aggregate_assessments(&import.rows);
    write_assessment_summary(&args.out, &summary)?;
    Ok(json!({"rows": import.rows.len(), "rejected": rejected, "summary": summary}))
}
