//! Per-configuration evaluation reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    avg_rank, bleu, exact_match, found_fraction, hit_rate, mean_ndcg, mrr, rouge1, semantic_similarity, MetricsError,
    NonAnswerDetector, RetrievalJudgment,
};
use crate::dataset::QATriplet;
use crate::pipeline::QueryTrace;
use crate::providers::Embedder;

/// Metric names accepted by [`EvalReport::metric`].
pub const METRIC_NAMES: [&str; 12] = [
    "ndcg",
    "hit_rate",
    "avg_rank",
    "found_fraction",
    "mrr",
    "rouge1_f",
    "rouge1_precision",
    "rouge1_recall",
    "bleu",
    "exact_match",
    "semantic_similarity",
    "non_answer_rate",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_id: String,
    /// Technique labels of the config, e.g. `["FTR", "AIR"]`.
    pub techniques: Vec<String>,
    pub alpha: f64,
    pub k: usize,
    pub n_questions: usize,
    pub ndcg: f64,
    pub hit_rate: f64,
    /// Mean gold rank over queries that found it; `None` if none did.
    pub avg_rank: Option<f64>,
    pub found_fraction: f64,
    pub mrr: f64,
    pub rouge1_f: f64,
    pub rouge1_precision: f64,
    pub rouge1_recall: f64,
    pub bleu: f64,
    pub exact_match: f64,
    pub semantic_similarity: f64,
    pub non_answer_count: usize,
    pub failed_count: usize,
    pub measured_seconds: f64,
    pub prep_overhead_seconds: f64,
    pub total_seconds: f64,
    pub embedding_model: String,
    pub generation_model: String,
    pub similarity_model: String,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "ndcg" => self.ndcg,
            "hit_rate" => self.hit_rate,
            "avg_rank" => return self.avg_rank,
            "found_fraction" => self.found_fraction,
            "mrr" => self.mrr,
            "rouge1_f" => self.rouge1_f,
            "rouge1_precision" => self.rouge1_precision,
            "rouge1_recall" => self.rouge1_recall,
            "bleu" => self.bleu,
            "exact_match" => self.exact_match,
            "semantic_similarity" => self.semantic_similarity,
            "non_answer_rate" => {
                if self.n_questions == 0 {
                    0.0
                } else {
                    self.non_answer_count as f64 / self.n_questions as f64
                }
            }
            _ => return None,
        })
    }

    pub fn is_known_metric(name: &str) -> bool {
        METRIC_NAMES.contains(&name)
    }

    pub fn time_hours(&self) -> f64 {
        self.total_seconds / 3600.0
    }
}

/// Run-level inputs to scoring besides the traces themselves.
pub struct ScoreContext<'a> {
    pub config_id: &'a str,
    pub techniques: Vec<String>,
    pub alpha: f64,
    pub k: usize,
    pub embedding_model: &'a str,
    pub generation_model: &'a str,
    pub prep_overhead_seconds: f64,
    pub similarity: &'a dyn Embedder,
    pub detector: &'a NonAnswerDetector,
}

/// The ranking scored for a trace: the passages given to the final
/// generation, or the merged initial rounds when the query failed first.
pub fn scored_ranking(trace: &QueryTrace) -> Vec<String> {
    if trace.final_context_ids.is_empty() {
        trace.primary_ranking()
    } else {
        trace.final_context_ids.clone()
    }
}

/// One binary judgment per trace. The gold id is the triplet's chunk
/// reference, else whatever `locate` returns for the gold passage, else
/// empty (never found).
pub fn judgments_from_traces(
    traces: &[QueryTrace],
    triplets: &[QATriplet],
    locate: &dyn Fn(&str) -> Option<String>,
) -> Vec<RetrievalJudgment> {
    traces
        .iter()
        .zip(triplets)
        .map(|(t, q)| {
            let gold = q.gold_chunk_ref.clone().or_else(|| locate(&q.gold_passage)).unwrap_or_default();
            RetrievalJudgment::binary(q.id.clone(), scored_ranking(t), gold)
        })
        .collect()
}

/// Aggregates every metric over a configuration's traces.
///
/// Non-answers are scored like any other answer and also counted.
/// `total_seconds` is the sum of per-question totals plus preparation
/// overhead.
pub fn score_run(
    traces: &[QueryTrace],
    triplets: &[QATriplet],
    judgments: &[RetrievalJudgment],
    ctx: &ScoreContext<'_>,
) -> Result<EvalReport, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::InvalidArgument("no traces to score".into()));
    }
    if traces.len() != triplets.len() || traces.len() != judgments.len() {
        return Err(MetricsError::InvalidArgument(format!(
            "misaligned inputs: {} traces, {} triplets, {} judgments",
            traces.len(),
            triplets.len(),
            judgments.len()
        )));
    }
    for (i, (t, q)) in traces.iter().zip(triplets).enumerate() {
        if t.original_question != q.question {
            return Err(MetricsError::InvalidArgument(format!("trace {i} does not match triplet {}", q.id)));
        }
    }
    let n = traces.len() as f64;
    let mut r1 = (0.0, 0.0, 0.0);
    let (mut bl, mut em, mut sim) = (0.0, 0.0, 0.0);
    for (t, q) in traces.iter().zip(triplets) {
        let r = rouge1(&t.final_answer, &q.answer);
        r1.0 += r.f1;
        r1.1 += r.precision;
        r1.2 += r.recall;
        bl += bleu(&t.final_answer, &q.answer);
        em += exact_match(&t.final_answer, &q.answer) as u8 as f64;
        if !t.final_answer.trim().is_empty() {
            sim += semantic_similarity(&t.final_answer, &q.answer, ctx.similarity)?;
        }
    }
    let measured: f64 = traces.iter().map(|t| t.timings.total).sum();
    Ok(EvalReport {
        config_id: ctx.config_id.to_string(),
        techniques: ctx.techniques.clone(),
        alpha: ctx.alpha,
        k: ctx.k,
        n_questions: traces.len(),
        ndcg: mean_ndcg(judgments, ctx.k)?,
        hit_rate: hit_rate(judgments, ctx.k)?,
        avg_rank: avg_rank(judgments)?,
        found_fraction: found_fraction(judgments)?,
        mrr: mrr(judgments)?,
        rouge1_f: r1.0 / n,
        rouge1_precision: r1.1 / n,
        rouge1_recall: r1.2 / n,
        bleu: bl / n,
        exact_match: em / n,
        semantic_similarity: sim / n,
        non_answer_count: ctx.detector.count(traces.iter().map(|t| t.final_answer.as_str())),
        failed_count: traces.iter().filter(|t| !t.is_complete()).count(),
        measured_seconds: measured,
        prep_overhead_seconds: ctx.prep_overhead_seconds,
        total_seconds: measured + ctx.prep_overhead_seconds,
        embedding_model: ctx.embedding_model.to_string(),
        generation_model: ctx.generation_model.to_string(),
        similarity_model: ctx.similarity.model().name.clone(),
    })
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> MetricsError {
    MetricsError::InvalidArgument(format!("{}: {e}", path.display()))
}

/// One JSON object per line, in the given order.
pub fn reports_to_jsonl(reports: &[EvalReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes") + "\n")
        .collect()
}

pub fn write_reports_jsonl(path: &Path, reports: &[EvalReport]) -> Result<(), MetricsError> {
    fs::write(path, reports_to_jsonl(reports)).map_err(|e| io_err(path, e))
}

pub fn read_reports_jsonl(path: &Path) -> Result<Vec<EvalReport>, MetricsError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| io_err(path, format!("line {}: {e}", i + 1))))
        .collect()
}

/// Spreadsheet view: techniques joined with `+`, undefined average rank as
/// an empty cell.
pub fn write_reports_csv(path: &Path, reports: &[EvalReport]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record([
        "config_id",
        "techniques",
        "alpha",
        "k",
        "n_questions",
        "ndcg",
        "hit_rate",
        "avg_rank",
        "found_fraction",
        "mrr",
        "rouge1_f",
        "rouge1_precision",
        "rouge1_recall",
        "bleu",
        "exact_match",
        "semantic_similarity",
        "non_answer_count",
        "failed_count",
        "measured_seconds",
        "prep_overhead_seconds",
        "total_seconds",
        "embedding_model",
        "generation_model",
        "similarity_model",
    ])
    .map_err(|e| io_err(path, e))?;
    for r in reports {
        let f = |x: f64| x.to_string();
        w.write_record([
            r.config_id.clone(),
            r.techniques.join("+"),
            f(r.alpha),
            r.k.to_string(),
            r.n_questions.to_string(),
            f(r.ndcg),
            f(r.hit_rate),
            r.avg_rank.map(f).unwrap_or_default(),
            f(r.found_fraction),
            f(r.mrr),
            f(r.rouge1_f),
            f(r.rouge1_precision),
            f(r.rouge1_recall),
            f(r.bleu),
            f(r.exact_match),
            f(r.semantic_similarity),
            r.non_answer_count.to_string(),
            r.failed_count.to_string(),
            f(r.measured_seconds),
            f(r.prep_overhead_seconds),
            f(r.total_seconds),
            r.embedding_model.clone(),
            r.generation_model.clone(),
            r.similarity_model.clone(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
