//! Okapi BM25 over an in-memory inverted index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::terms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseIndex {
    pub(crate) params: Bm25Params,
    pub(crate) doc_ids: Vec<String>,
    pub(crate) doc_lengths: Vec<u32>,
    pub(crate) by_id: HashMap<String, u32>,
    /// term -> (document ordinal, term frequency), ordinals ascending
    pub(crate) postings: BTreeMap<String, Vec<(u32, u32)>>,
    total_len: u64,
}

impl SparseIndex {
    pub fn new(params: Bm25Params) -> Self {
        Self { params, ..Default::default() }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Number of indexed documents.
    pub fn n(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.doc_ids.len() as f64
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn doc_length(&self, id: &str) -> Option<u32> {
        self.by_id.get(id).map(|i| self.doc_lengths[*i as usize])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Adds a document; returns false if the id is already indexed.
    pub fn add(&mut self, id: &str, text: &str) -> bool {
        if self.by_id.contains_key(id) {
            return false;
        }
        let ordinal = self.doc_ids.len() as u32;
        let tokens = terms(text);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        for (term, freq) in tf {
            self.postings.entry(term).or_default().push((ordinal, freq));
        }
        self.doc_ids.push(id.to_string());
        self.doc_lengths.push(tokens.len() as u32);
        self.by_id.insert(id.to_string(), ordinal);
        self.total_len += tokens.len() as u64;
        true
    }

    pub(crate) fn from_parts(
        params: Bm25Params,
        doc_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<(u32, u32)>>,
    ) -> Self {
        let by_id = doc_ids.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
        let total_len = doc_lengths.iter().map(|l| u64::from(*l)).sum();
        Self { params, doc_ids, doc_lengths, by_id, postings, total_len }
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n() as f64;
        let df = self.document_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_score(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let norm = 1.0 - b + b * f64::from(doc_len) / self.avgdl();
        idf * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    fn query_terms(query: &str) -> BTreeSet<String> {
        terms(query).into_iter().collect()
    }

    /// BM25 scores of every document sharing at least one query term.
    pub fn score_all(&self, query: &str) -> Vec<(String, f64)> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for term in Self::query_terms(query) {
            let Some(list) = self.postings.get(&term) else { continue };
            let idf = self.idf(&term);
            for (doc, tf) in list {
                *acc.entry(*doc).or_insert(0.0) += self.term_score(idf, *tf, self.doc_lengths[*doc as usize]);
            }
        }
        acc.into_iter()
            .map(|(doc, s)| (self.doc_ids[doc as usize].clone(), s))
            .collect()
    }

    /// BM25 score of one document; 0 when it shares no term with the query.
    pub fn score_of(&self, query: &str, id: &str) -> f64 {
        let Some(&doc) = self.by_id.get(id) else { return 0.0 };
        let mut score = 0.0;
        for term in Self::query_terms(query) {
            let Some(list) = self.postings.get(&term) else { continue };
            if let Ok(pos) = list.binary_search_by_key(&doc, |(d, _)| *d) {
                score += self.term_score(self.idf(&term), list[pos].1, self.doc_lengths[doc as usize]);
            }
        }
        score
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SparseIndex {
        let mut idx = SparseIndex::new(Bm25Params::default());
        idx.add("d1", "apple banana");
        idx.add("d2", "banana cherry");
        idx
    }

    #[test]
    fn toy_score_is_ln2() {
        let idx = toy();
        let scores = idx.score_all("apple");
        assert_eq!(scores.len(), 1);
        assert_eq!(scores[0].0, "d1");
        assert!((scores[0].1 - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(idx.score_of("apple", "d2"), 0.0);
        assert_eq!(idx.score_of("apple", "d1"), scores[0].1);
    }

    #[test]
    fn statistics() {
        let idx = toy();
        assert_eq!(idx.n(), 2);
        assert_eq!(idx.avgdl(), 2.0);
        assert_eq!(idx.document_frequency("banana"), 2);
        assert!(idx.postings.values().flatten().all(|(_, tf)| *tf > 0));
    }

    #[test]
    fn duplicate_add_is_skipped() {
        let mut idx = toy();
        assert!(!idx.add("d1", "something else"));
        assert_eq!(idx.n(), 2);
    }

    #[test]
    fn unknown_terms_score_nothing() {
        assert!(toy().score_all("durian").is_empty());
    }
}
