//! Answer-quality measures: ROUGE-1, BLEU, exact match and embedding similarity.

use std::collections::HashMap;

use crate::providers::{cosine, Embedder};
use crate::text::{collapse_casefold, terms};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rouge1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn counts<'a, T: std::hash::Hash + Eq + 'a>(items: impl Iterator<Item = T>) -> HashMap<T, usize> {
    let mut map = HashMap::new();
    for item in items {
        *map.entry(item).or_insert(0) += 1;
    }
    map
}

fn clipped_overlap<T: std::hash::Hash + Eq>(cand: &HashMap<T, usize>, reference: &HashMap<T, usize>) -> usize {
    cand.iter()
        .map(|(g, c)| (*c).min(reference.get(g).copied().unwrap_or(0)))
        .sum()
}

/// Unigram overlap with clipping.
pub fn rouge1(candidate: &str, reference: &str) -> Rouge1 {
    let cand = terms(candidate);
    let refr = terms(reference);
    if cand.is_empty() || refr.is_empty() {
        return Rouge1 { precision: 0.0, recall: 0.0, f1: 0.0 };
    }
    let overlap = clipped_overlap(&counts(cand.iter()), &counts(refr.iter())) as f64;
    let precision = overlap / cand.len() as f64;
    let recall = overlap / refr.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Rouge1 { precision, recall, f1 }
}

pub fn rouge1_f(candidate: &str, reference: &str) -> f64 {
    rouge1(candidate, reference).f1
}

/// Unsmoothed BLEU against a single reference.
///
/// The n-gram order runs from 1 to `min(4, |candidate|)`; any zero precision
/// yields 0. The brevity penalty applies when the candidate is shorter.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    let cand = terms(candidate);
    let refr = terms(reference);
    let c = cand.len();
    let r = refr.len();
    if c == 0 || r == 0 {
        return 0.0;
    }
    let max_order = c.min(4);
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let cand_ngrams = counts(cand.windows(n));
        let ref_ngrams = counts(refr.windows(n));
        let matched = clipped_overlap(&cand_ngrams, &ref_ngrams);
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / (c - n + 1) as f64).ln();
    }
    let geo = (log_sum / max_order as f64).exp();
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    (geo * bp).clamp(0.0, 1.0)
}

/// Case-insensitive, whitespace-collapsed equality. Punctuation is significant.
pub fn exact_match(candidate: &str, reference: &str) -> bool {
    collapse_casefold(candidate) == collapse_casefold(reference)
}

/// Cosine of the two embeddings, with negative values clamped to 0.
pub fn semantic_similarity(candidate: &str, reference: &str, embedder: &dyn Embedder) -> Result<f64, MetricsError> {
    if candidate.trim().is_empty() || reference.trim().is_empty() {
        return Err(MetricsError::InvalidArgument(
            "semantic similarity needs two non-empty texts".into(),
        ));
    }
    let vectors = embedder.embed(&[candidate.to_string(), reference.to_string()])?;
    Ok(cosine(&vectors[0], &vectors[1]).clamp(0.0, 1.0))
}
