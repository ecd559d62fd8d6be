use std::collections::HashSet;

use crate::index::{RetrievalResult, Retriever};
use crate::text::whitespace_len;

/// Union of several rankings in rank order: every rank-1 item (in round
/// order), then every rank-2 item, and so on, keeping first occurrences.
pub fn merge_ranked(rounds: &[&RetrievalResult]) -> Vec<String> {
    let mut items: Vec<(usize, usize, &str)> = rounds
        .iter()
        .enumerate()
        .flat_map(|(round, r)| r.ranked.iter().map(move |i| (i.rank, round, i.chunk_id.as_str())))
        .collect();
    items.sort();
    let mut seen = HashSet::new();
    items.into_iter().filter(|(_, _, id)| seen.insert(*id)).map(|(_, _, id)| id.to_string()).collect()
}

/// Passages for a generation call: merged rank order, truncated at the
/// first passage that would exceed `budget_tokens` whitespace tokens.
pub fn assemble_context(rounds: &[&RetrievalResult], retriever: &Retriever, budget_tokens: usize) -> Vec<(String, String)> {
    let mut used = 0;
    let mut out = Vec::new();
    for id in merge_ranked(rounds) {
        let Some(chunk) = retriever.chunk(&id) else { continue };
        let n = whitespace_len(&chunk.text);
        if used + n > budget_tokens {
            break;
        }
        used += n;
        out.push((id, chunk.text));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{RankedItem, RetrievalMode};

    fn result(ids: &[&str]) -> RetrievalResult {
        RetrievalResult {
            query: "q".into(),
            mode: RetrievalMode::Sparse,
            ranked: ids
                .iter()
                .enumerate()
                .map(|(i, id)| RankedItem { chunk_id: id.to_string(), score: 1.0 / (i + 1) as f64, rank: i + 1 })
                .collect(),
        }
    }

    #[test]
    fn interleaves_by_rank_then_round() {
        let a = result(&["a", "b", "c"]);
        let b = result(&["d", "a", "e"]);
        assert_eq!(merge_ranked(&[&a, &b]), vec!["a", "d", "b", "c", "e"]);
    }
}
