//! Retrieval and generation quality measures, non-answer counting, and
//! per-configuration evaluation reports.

pub mod generation;
pub mod nonanswer;
pub mod report;
pub mod retrieval;

use thiserror::Error;

use crate::providers::ProviderError;

pub use generation::{bleu, exact_match, rouge1, rouge1_f, semantic_similarity, Rouge1};
pub use nonanswer::{detect_non_answer, NonAnswerDetector};
pub use report::{
    judgments_from_traces, read_reports_jsonl, reports_to_jsonl, score_run, scored_ranking, write_reports_csv,
    write_reports_jsonl, EvalReport, ScoreContext, METRIC_NAMES,
};
pub use retrieval::{avg_rank, found_fraction, hit_rate, mean_ndcg, mrr, ndcg, RetrievalJudgment};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}
