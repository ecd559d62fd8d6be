//! Retrieval engines: flat dense cosine search, BM25, and their
//! alpha-weighted fusion, behind one lock so searches never observe a
//! partially applied batch.

pub mod dense;
pub mod persist;
pub mod sparse;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Chunk;
use crate::providers::{Embedder, ProviderError};

pub use dense::DenseIndex;
pub use sparse::{Bm25Params, SparseIndex};

pub const DEFAULT_K: usize = 5;
/// Candidates fetched from each side per requested result before fusion.
pub const POOL_FACTOR: usize = 4;
const EMBED_BATCH: usize = 64;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vector dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("corrupt index file {file}: {reason}")]
    Corrupt { file: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RetrievalMode {
    Dense,
    Sparse,
    Hybrid { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub chunk_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: String,
    pub mode: RetrievalMode,
    pub ranked: Vec<RankedItem>,
}

impl RetrievalResult {
    pub fn ids(&self) -> Vec<String> {
        self.ranked.iter().map(|r| r.chunk_id.clone()).collect()
    }

    /// Scores non-increasing, ranks 1..n, ids unique.
    pub fn is_well_formed(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.ranked.iter().enumerate().all(|(i, r)| r.rank == i + 1 && seen.insert(r.chunk_id.as_str()))
            && self.ranked.windows(2).all(|w| w[0].score >= w[1].score)
    }
}

/// Sorts by score descending then chunk id ascending, keeps `k`, assigns ranks.
pub fn rank_top_k(mut scored: Vec<(String, f64)>, k: usize) -> Vec<RankedItem> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (chunk_id, score))| RankedItem { chunk_id, score, rank: i + 1 })
        .collect()
}

/// Min-max normalization to [0, 1]; constant lists map to 1.0.
pub fn min_max(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.is_empty() || hi - lo <= 0.0 {
        return vec![1.0; scores.len()];
    }
    scores.iter().map(|s| (s - lo) / (hi - lo)).collect()
}

#[derive(Default)]
struct State {
    order: Vec<String>,
    chunks: HashMap<String, Chunk>,
    sparse: SparseIndex,
    dense: HashMap<String, Arc<DenseIndex>>,
}

/// Chunk table plus sparse and per-model dense indexes.
///
/// Dense indexes are keyed by embedding model name and built on first use,
/// so querying with a different model than the build model rebuilds.
pub struct Retriever {
    state: RwLock<State>,
    writer: Mutex<()>,
}

fn embed_all(embedder: &dyn Embedder, texts: &[String]) -> Result<Vec<crate::providers::EmbeddingVector>, IndexError> {
    let mut out = Vec::with_capacity(texts.len());
    for batch in texts.chunks(EMBED_BATCH) {
        let vs = embedder.embed(batch)?;
        if vs.len() != batch.len() {
            return Err(ProviderError::Protocol(format!("expected {} vectors, got {}", batch.len(), vs.len())).into());
        }
        out.extend(vs);
    }
    Ok(out)
}

impl Retriever {
    pub fn new(params: Bm25Params) -> Self {
        Self {
            state: RwLock::new(State { sparse: SparseIndex::new(params), ..Default::default() }),
            writer: Mutex::new(()),
        }
    }

    pub fn params(&self) -> Bm25Params {
        self.state.read().expect("index lock poisoned").sparse.params()
    }

    pub fn len(&self) -> usize {
        self.state.read().expect("index lock poisoned").order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn chunk(&self, id: &str) -> Option<Chunk> {
        self.state.read().expect("index lock poisoned").chunks.get(id).cloned()
    }

    /// Chunks in insertion order.
    pub fn chunks(&self) -> Vec<Chunk> {
        let st = self.state.read().expect("index lock poisoned");
        st.order.iter().map(|id| st.chunks[id].clone()).collect()
    }

    /// Id of the chunk holding `passage`: the first chunk in insertion order
    /// whose terms contain the passage's terms contiguously, else the top
    /// sparse hit (a passage cut by a chunk boundary lands in its better half).
    pub fn locate_passage(&self, passage: &str) -> Option<String> {
        let needle = crate::text::terms(passage);
        if needle.is_empty() {
            return None;
        }
        let st = self.state.read().expect("index lock poisoned");
        let contained = st.order.iter().find(|id| {
            let hay = crate::text::terms(&st.chunks[*id].text);
            hay.windows(needle.len()).any(|w| w == needle.as_slice())
        });
        if let Some(id) = contained {
            return Some(id.clone());
        }
        drop(st);
        self.sparse_search(passage, 1).ok()?.ranked.into_iter().next().map(|r| r.chunk_id)
    }

    pub fn sparse_stats(&self) -> (usize, f64) {
        let st = self.state.read().expect("index lock poisoned");
        (st.sparse.n(), st.sparse.avgdl())
    }

    pub fn sparse_snapshot(&self) -> SparseIndex {
        self.state.read().expect("index lock poisoned").sparse.clone()
    }

    pub fn dense_models(&self) -> Vec<String> {
        let mut v: Vec<_> = self.state.read().expect("index lock poisoned").dense.keys().cloned().collect();
        v.sort();
        v
    }

    /// Adds chunks to every index. Duplicate ids are skipped. Embeddings are
    /// computed before any index changes; a provider failure leaves the
    /// retriever untouched. Dense indexes of models other than `embedder`'s
    /// are dropped and rebuilt on their next use.
    pub fn index_add(&self, chunks: &[Chunk], embedder: &dyn Embedder) -> Result<usize, IndexError> {
        let _writer = self.writer.lock().expect("index writer poisoned");
        let fresh: Vec<Chunk> = {
            let st = self.state.read().expect("index lock poisoned");
            let mut seen = BTreeSet::new();
            chunks
                .iter()
                .filter(|c| !st.chunks.contains_key(&c.chunk_id) && seen.insert(c.chunk_id.clone()))
                .cloned()
                .collect()
        };
        if fresh.is_empty() {
            return Ok(0);
        }
        let texts: Vec<String> = fresh.iter().map(|c| c.text.clone()).collect();
        let vectors = embed_all(embedder, &texts)?;
        let mut dense = if self.is_empty() {
            DenseIndex::new(embedder.model().clone(), embedder.dim())
        } else {
            (*self.dense_for(embedder)?).clone()
        };
        for (c, v) in fresh.iter().zip(vectors) {
            dense.push(c.chunk_id.clone(), v)?;
        }

        let mut st = self.state.write().expect("index lock poisoned");
        let added = fresh.len();
        for c in fresh {
            st.sparse.add(&c.chunk_id, &c.text);
            st.order.push(c.chunk_id.clone());
            st.chunks.insert(c.chunk_id.clone(), c);
        }
        st.dense.clear();
        st.dense.insert(embedder.model().name.clone(), Arc::new(dense));
        Ok(added)
    }

    pub(crate) fn install(&self, chunks: Vec<Chunk>, sparse: SparseIndex, dense: Option<DenseIndex>) {
        let mut st = self.state.write().expect("index lock poisoned");
        st.order = chunks.iter().map(|c| c.chunk_id.clone()).collect();
        st.chunks = chunks.into_iter().map(|c| (c.chunk_id.clone(), c)).collect();
        st.sparse = sparse;
        st.dense.clear();
        if let Some(d) = dense {
            st.dense.insert(d.model().name.clone(), Arc::new(d));
        }
    }

    /// The dense index for the embedder's model, building it if needed.
    pub fn dense_for(&self, embedder: &dyn Embedder) -> Result<Arc<DenseIndex>, IndexError> {
        let name = &embedder.model().name;
        if let Some(d) = self.state.read().expect("index lock poisoned").dense.get(name) {
            if d.dim() == embedder.dim() && d.len() == self.len() {
                return Ok(d.clone());
            }
        }
        let (ids, texts): (Vec<String>, Vec<String>) = {
            let st = self.state.read().expect("index lock poisoned");
            st.order.iter().map(|id| (id.clone(), st.chunks[id].text.clone())).unzip()
        };
        let vectors = if texts.is_empty() { Vec::new() } else { embed_all(embedder, &texts)? };
        let mut d = DenseIndex::new(embedder.model().clone(), embedder.dim());
        for (id, v) in ids.into_iter().zip(vectors) {
            d.push(id, v)?;
        }
        let d = Arc::new(d);
        let mut st = self.state.write().expect("index lock poisoned");
        if d.len() == st.order.len() {
            st.dense.insert(name.clone(), d.clone());
        }
        Ok(d)
    }

    fn check_k(k: usize) -> Result<(), IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidArgument("k must be >= 1".into()));
        }
        Ok(())
    }

    fn embed_query(embedder: &dyn Embedder, query: &str) -> Result<crate::providers::EmbeddingVector, IndexError> {
        Ok(embedder
            .embed(&[query.to_string()])?
            .pop()
            .ok_or_else(|| ProviderError::Protocol("no query vector returned".into()))?)
    }

    fn dense_scores(&self, query: &str, embedder: &dyn Embedder) -> Result<Vec<(String, f64)>, IndexError> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let index = self.dense_for(embedder)?;
        let q = Self::embed_query(embedder, query)?;
        index.score_all(&q)
    }

    /// Top-k by cosine similarity. An empty index yields an empty result.
    pub fn dense_search(&self, query: &str, k: usize, embedder: &dyn Embedder) -> Result<RetrievalResult, IndexError> {
        Self::check_k(k)?;
        let scored = self.dense_scores(query, embedder)?;
        Ok(RetrievalResult { query: query.into(), mode: RetrievalMode::Dense, ranked: rank_top_k(scored, k) })
    }

    /// Top-k by BM25; documents sharing no query term are omitted.
    pub fn sparse_search(&self, query: &str, k: usize) -> Result<RetrievalResult, IndexError> {
        Self::check_k(k)?;
        let scored = self.state.read().expect("index lock poisoned").sparse.score_all(query);
        Ok(RetrievalResult { query: query.into(), mode: RetrievalMode::Sparse, ranked: rank_top_k(scored, k) })
    }

    /// Convex fusion of min-max-normalized dense and BM25 scores.
    ///
    /// The candidate pool is the union of each side's top `4k`. Every pool
    /// member is scored on both sides, so the fused order at `alpha = 1`
    /// (`alpha = 0`) is exactly the dense (BM25) order over the pool.
    pub fn hybrid_search(
        &self,
        query: &str,
        k: usize,
        alpha: f64,
        embedder: &dyn Embedder,
    ) -> Result<RetrievalResult, IndexError> {
        Self::check_k(k)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(IndexError::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
        }
        let pool_k = k * POOL_FACTOR;
        let dense_all = self.dense_scores(query, embedder)?;
        let dense_top = rank_top_k(dense_all.clone(), pool_k);
        let sparse_top = self.sparse_search(query, pool_k)?.ranked;

        let mut pool: Vec<String> = dense_top.iter().chain(&sparse_top).map(|r| r.chunk_id.clone()).collect();
        pool.sort();
        pool.dedup();

        let dense_map: HashMap<&str, f64> = dense_all.iter().map(|(id, s)| (id.as_str(), *s)).collect();
        let dense_raw: Vec<f64> = pool.iter().map(|id| dense_map.get(id.as_str()).copied().unwrap_or(0.0)).collect();
        let sparse_raw: Vec<f64> = {
            let st = self.state.read().expect("index lock poisoned");
            pool.iter().map(|id| st.sparse.score_of(query, id)).collect()
        };
        let (dn, sn) = (min_max(&dense_raw), min_max(&sparse_raw));
        let fused: Vec<(String, f64)> = pool
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, alpha * dn[i] + (1.0 - alpha) * sn[i]))
            .collect();
        Ok(RetrievalResult { query: query.into(), mode: RetrievalMode::Hybrid { alpha }, ranked: rank_top_k(fused, k) })
    }

    /// Pure dense at `alpha = 1`, pure BM25 at `alpha = 0`, fusion otherwise.
    pub fn search(&self, query: &str, k: usize, alpha: f64, embedder: &dyn Embedder) -> Result<RetrievalResult, IndexError> {
        if alpha == 1.0 {
            self.dense_search(query, k, embedder)
        } else if alpha == 0.0 {
            self.sparse_search(query, k)
        } else {
            self.hybrid_search(query, k, alpha, embedder)
        }
    }
}
