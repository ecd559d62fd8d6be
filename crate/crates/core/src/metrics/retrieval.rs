//! Ranking-quality measures over retrieval judgments.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// One query's ranked retrieval output against its gold passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalJudgment {
    pub query_ref: String,
    pub ranked_ids: Vec<String>,
    pub gold_id: String,
    /// Graded relevance. When absent, relevance is binary on `gold_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<HashMap<String, f64>>,
}

impl RetrievalJudgment {
    pub fn binary(query_ref: impl Into<String>, ranked_ids: Vec<String>, gold_id: impl Into<String>) -> Self {
        Self {
            query_ref: query_ref.into(),
            ranked_ids,
            gold_id: gold_id.into(),
            relevance: None,
        }
    }

    pub fn grade(&self, id: &str) -> f64 {
        match &self.relevance {
            Some(map) => map.get(id).copied().unwrap_or(0.0),
            None if id == self.gold_id => 1.0,
            None => 0.0,
        }
    }

    /// 1-based rank of the gold passage, if retrieved.
    pub fn gold_rank(&self) -> Option<usize> {
        self.ranked_ids.iter().position(|id| *id == self.gold_id).map(|p| p + 1)
    }

    fn first_relevant_rank(&self) -> Option<usize> {
        self.ranked_ids.iter().position(|id| self.grade(id) > 0.0).map(|p| p + 1)
    }

    fn ideal_grades(&self) -> Vec<f64> {
        let mut grades: Vec<f64> = match &self.relevance {
            Some(map) => map.values().copied().filter(|g| *g > 0.0).collect(),
            None => vec![1.0],
        };
        grades.sort_by(|a, b| b.total_cmp(a));
        grades
    }
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// Normalized discounted cumulative gain at depth `k`.
///
/// Returns 0 when no relevant item exists (IDCG = 0).
pub fn ndcg(judgment: &RetrievalJudgment, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidArgument("ndcg depth k must be >= 1".into()));
    }
    let dcg: f64 = judgment
        .ranked_ids
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, id)| judgment.grade(id) / discount(i + 1))
        .sum();
    let idcg: f64 = judgment
        .ideal_grades()
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g / discount(i + 1))
        .sum();
    if idcg <= 0.0 {
        return Ok(0.0);
    }
    Ok((dcg / idcg).min(1.0))
}

fn require_nonempty(judgments: &[RetrievalJudgment]) -> Result<(), MetricsError> {
    if judgments.is_empty() {
        return Err(MetricsError::InvalidArgument("empty judgment list".into()));
    }
    Ok(())
}

/// Fraction of queries whose gold passage appears in the top `k`.
pub fn hit_rate(judgments: &[RetrievalJudgment], k: usize) -> Result<f64, MetricsError> {
    require_nonempty(judgments)?;
    let hits = judgments
        .iter()
        .filter(|j| j.gold_rank().is_some_and(|r| r <= k))
        .count();
    Ok(hits as f64 / judgments.len() as f64)
}

/// Mean gold rank over queries where the gold passage was retrieved.
///
/// `None` when no query retrieved its gold passage.
pub fn avg_rank(judgments: &[RetrievalJudgment]) -> Result<Option<f64>, MetricsError> {
    require_nonempty(judgments)?;
    let ranks: Vec<usize> = judgments.iter().filter_map(RetrievalJudgment::gold_rank).collect();
    if ranks.is_empty() {
        return Ok(None);
    }
    Ok(Some(ranks.iter().sum::<usize>() as f64 / ranks.len() as f64))
}

/// Fraction of queries that retrieved their gold passage at any depth.
pub fn found_fraction(judgments: &[RetrievalJudgment]) -> Result<f64, MetricsError> {
    require_nonempty(judgments)?;
    let found = judgments.iter().filter(|j| j.gold_rank().is_some()).count();
    Ok(found as f64 / judgments.len() as f64)
}

/// Mean reciprocal rank of the first relevant item; absent items contribute 0.
pub fn mrr(judgments: &[RetrievalJudgment]) -> Result<f64, MetricsError> {
    require_nonempty(judgments)?;
    let total: f64 = judgments
        .iter()
        .map(|j| j.first_relevant_rank().map_or(0.0, |r| 1.0 / r as f64))
        .sum();
    Ok(total / judgments.len() as f64)
}

/// Mean nDCG@k over a judgment list.
pub fn mean_ndcg(judgments: &[RetrievalJudgment], k: usize) -> Result<f64, MetricsError> {
    require_nonempty(judgments)?;
    let mut sum = 0.0;
    for j in judgments {
        sum += ndcg(j, k)?;
    }
    Ok(sum / judgments.len() as f64)
}
