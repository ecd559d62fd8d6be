//! Configurable retrieve-then-generate pipelines and the configuration
//! matrix runner.

pub mod config;
pub mod context;
pub mod engine;
pub mod matrix;
pub mod records;
pub mod runner;
pub mod trace;

use thiserror::Error;

use crate::index::IndexError;
use crate::providers::ProviderError;

pub use config::{validate_all, PipelineConfig, DEFAULT_FAN_OUT, DEFAULT_FIXED_ROUNDS, DEFAULT_MAX_ADAPTIVE_ITERS};
pub use context::{assemble_context, merge_ranked};
pub use engine::{parse_verdict, Execution, Pipeline, PipelineEnv, SimulatedCosts, TimingMode, MAX_SUB_QUESTIONS};
pub use matrix::{default_matrix, demo_matrix, load_matrix, parse_json, parse_table, to_table};
pub use records::{RunLock, RunRecords};
pub use runner::{run_matrix, ConfigRun, MatrixOutcome, RunOptions, SkippedConfig};
pub use trace::{
    ClarificationChild, ClarificationTree, ExpandedQuery, GenerationCall, QueryOrigin, QueryTrace, RetrievalRound,
    RoundStage, StageTimings, SubQuestionTrace,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config {config_id}: {}", problems.join("; "))]
    InvalidConfig { config_id: String, problems: Vec<String> },
    #[error("invalid matrix: {}", problems.join("; "))]
    InvalidMatrix { problems: Vec<String> },
    #[error("matrix line {line}: {reason}")]
    MatrixParse { line: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad run record {path}: {reason}")]
    Record { path: String, reason: String },
    #[error("run directory is locked: {path}")]
    Locked { path: String },
}
