//! On-disk index layout.
//!
//! ```text
//! <dir>/manifest.json   {"format_version":1,"dim":..,"model":{..},"k1":..,"b":..,"n":..}
//! <dir>/chunks.jsonl    chunk export, one record per line, insertion order
//! <dir>/vectors.bin     dense vectors of the manifest model
//! <dir>/postings.bin    BM25 document table and postings
//! ```
//!
//! All integers and floats are little-endian. Strings are a `u32` byte
//! length followed by UTF-8 bytes.
//!
//! `vectors.bin`: magic `RTDV`, `u32` version, `u32` dim, `u64` count, then
//! per entry a string id and `dim` × `f32`.
//!
//! `postings.bin`: magic `RTSP`, `u32` version, `u64` document count, per
//! document a string id and `u32` token length; `u64` term count, then per
//! term (ascending byte order) a string term, `u32` posting count, and per
//! posting `u32` document ordinal and `u32` term frequency.
//!
//! A manifest or binary with another format version is rebuilt from
//! `chunks.jsonl`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bm25Params, DenseIndex, IndexError, Retriever, SparseIndex};
use crate::corpus::{read_chunks_jsonl, write_chunks_jsonl, Chunk, CorpusError};
use crate::providers::{Embedder, EmbeddingVector, ModelId};

pub const FORMAT_VERSION: u32 = 1;
const VECTORS_MAGIC: &[u8; 4] = b"RTDV";
const POSTINGS_MAGIC: &[u8; 4] = b"RTSP";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format_version: u32,
    pub dim: usize,
    pub model: ModelId,
    pub k1: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadOutcome {
    Loaded,
    Rebuilt { reason: String },
}

fn io(path: &Path, source: std::io::Error) -> IndexError {
    IndexError::Io { path: path.display().to_string(), source }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> IndexError {
    IndexError::Corrupt { file: path.display().to_string(), reason: reason.into() }
}

fn from_corpus(e: CorpusError) -> IndexError {
    match e {
        CorpusError::Io { path, source } => IndexError::Io { path, source },
        CorpusError::Integrity { file, reason } => IndexError::Corrupt { file, reason },
        other => IndexError::InvalidArgument(other.to_string()),
    }
}

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }
    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
    fn f32(&mut self) -> Option<f32> {
        self.take(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
    fn string(&mut self) -> Option<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).ok()
    }
}

/// Writes the index directory, building dense vectors with `embedder`.
pub fn save_index(dir: &Path, retriever: &Retriever, embedder: &dyn Embedder) -> Result<IndexManifest, IndexError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let dense = retriever.dense_for(embedder)?;
    let sparse = retriever.sparse_snapshot();
    let chunks = retriever.chunks();
    write_chunks_jsonl(&dir.join("chunks.jsonl"), &chunks).map_err(from_corpus)?;

    let vpath = dir.join("vectors.bin");
    let mut w = BufWriter::new(fs::File::create(&vpath).map_err(|e| io(&vpath, e))?);
    (|| -> std::io::Result<()> {
        w.write_all(VECTORS_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(dense.dim() as u32).to_le_bytes())?;
        w.write_all(&(dense.len() as u64).to_le_bytes())?;
        for (id, v) in dense.ids.iter().zip(&dense.vectors) {
            put_str(&mut w, id)?;
            for x in &v.values {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    })()
    .map_err(|e| io(&vpath, e))?;

    let ppath = dir.join("postings.bin");
    let mut w = BufWriter::new(fs::File::create(&ppath).map_err(|e| io(&ppath, e))?);
    (|| -> std::io::Result<()> {
        w.write_all(POSTINGS_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(sparse.doc_ids.len() as u64).to_le_bytes())?;
        for (id, len) in sparse.doc_ids.iter().zip(&sparse.doc_lengths) {
            put_str(&mut w, id)?;
            w.write_all(&len.to_le_bytes())?;
        }
        w.write_all(&(sparse.postings.len() as u64).to_le_bytes())?;
        for (term, list) in &sparse.postings {
            put_str(&mut w, term)?;
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for (doc, tf) in list {
                w.write_all(&doc.to_le_bytes())?;
                w.write_all(&tf.to_le_bytes())?;
            }
        }
        w.flush()
    })()
    .map_err(|e| io(&ppath, e))?;

    let params = sparse.params();
    let manifest = IndexManifest {
        format_version: FORMAT_VERSION,
        dim: dense.dim(),
        model: dense.model().clone(),
        k1: params.k1,
        b: params.b,
        n: chunks.len(),
    };
    let mpath = dir.join("manifest.json");
    fs::write(&mpath, serde_json::to_vec_pretty(&manifest).expect("manifest serializes")).map_err(|e| io(&mpath, e))?;
    Ok(manifest)
}

fn read_file(path: &Path) -> Result<Vec<u8>, IndexError> {
    let mut buf = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map_err(|e| io(path, e))?;
    Ok(buf)
}

enum Binary<T> {
    Ok(T),
    WrongVersion(u32),
}

fn read_vectors(path: &Path, model: &ModelId) -> Result<Binary<DenseIndex>, IndexError> {
    let buf = read_file(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    let bad = || corrupt(path, "truncated or malformed vectors file");
    if r.take(4).ok_or_else(bad)? != VECTORS_MAGIC {
        return Err(corrupt(path, "bad magic"));
    }
    let version = r.u32().ok_or_else(bad)?;
    if version != FORMAT_VERSION {
        return Ok(Binary::WrongVersion(version));
    }
    let dim = r.u32().ok_or_else(bad)? as usize;
    let count = r.u64().ok_or_else(bad)?;
    let mut d = DenseIndex::new(model.clone(), dim);
    for _ in 0..count {
        let id = r.string().ok_or_else(bad)?;
        let values = (0..dim).map(|_| r.f32()).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
        d.push(id, EmbeddingVector::new(values))?;
    }
    if r.pos != buf.len() {
        return Err(corrupt(path, "trailing bytes"));
    }
    Ok(Binary::Ok(d))
}

fn read_postings(path: &Path, params: Bm25Params) -> Result<Binary<SparseIndex>, IndexError> {
    let buf = read_file(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    let bad = || corrupt(path, "truncated or malformed postings file");
    if r.take(4).ok_or_else(bad)? != POSTINGS_MAGIC {
        return Err(corrupt(path, "bad magic"));
    }
    let version = r.u32().ok_or_else(bad)?;
    if version != FORMAT_VERSION {
        return Ok(Binary::WrongVersion(version));
    }
    let docs = r.u64().ok_or_else(bad)?;
    let mut ids = Vec::new();
    let mut lengths = Vec::new();
    for _ in 0..docs {
        ids.push(r.string().ok_or_else(bad)?);
        lengths.push(r.u32().ok_or_else(bad)?);
    }
    let terms = r.u64().ok_or_else(bad)?;
    let mut postings = BTreeMap::new();
    for _ in 0..terms {
        let term = r.string().ok_or_else(bad)?;
        let n = r.u32().ok_or_else(bad)?;
        let mut list = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let doc = r.u32().ok_or_else(bad)?;
            let tf = r.u32().ok_or_else(bad)?;
            if doc as u64 >= docs || tf == 0 {
                return Err(corrupt(path, format!("invalid posting for term {term:?}")));
            }
            list.push((doc, tf));
        }
        postings.insert(term, list);
    }
    if r.pos != buf.len() {
        return Err(corrupt(path, "trailing bytes"));
    }
    Ok(Binary::Ok(SparseIndex::from_parts(params, ids, lengths, postings)))
}

fn rebuild(chunks: Vec<Chunk>, params: Bm25Params) -> Retriever {
    let mut sparse = SparseIndex::new(params);
    for c in &chunks {
        sparse.add(&c.chunk_id, &c.text);
    }
    let r = Retriever::new(params);
    r.install(chunks, sparse, None);
    r
}

/// Loads an index directory. Version mismatches trigger a rebuild from the
/// chunk export; dense vectors are then recomputed on first query.
pub fn load_index(dir: &Path) -> Result<(Retriever, IndexManifest, LoadOutcome), IndexError> {
    let mpath = dir.join("manifest.json");
    let manifest: IndexManifest =
        serde_json::from_slice(&read_file(&mpath)?).map_err(|e| corrupt(&mpath, e.to_string()))?;
    let params = Bm25Params { k1: manifest.k1, b: manifest.b };
    let chunks = read_chunks_jsonl(&dir.join("chunks.jsonl")).map_err(from_corpus)?;
    if manifest.format_version != FORMAT_VERSION {
        let reason = format!("manifest format {} != {}", manifest.format_version, FORMAT_VERSION);
        tracing::warn!(dir = %dir.display(), %reason, "rebuilding index");
        return Ok((rebuild(chunks, params), manifest, LoadOutcome::Rebuilt { reason }));
    }
    let vpath = dir.join("vectors.bin");
    let ppath = dir.join("postings.bin");
    let dense = read_vectors(&vpath, &manifest.model)?;
    let sparse = read_postings(&ppath, params)?;
    match (dense, sparse) {
        (Binary::Ok(dense), Binary::Ok(sparse)) => {
            let ids: Vec<&str> = chunks.iter().map(|c| c.chunk_id.as_str()).collect();
            if sparse.doc_ids.iter().map(String::as_str).ne(ids.iter().copied()) {
                return Err(corrupt(&ppath, "document table does not match chunks.jsonl"));
            }
            if dense.ids.iter().map(String::as_str).ne(ids.iter().copied()) || dense.dim() != manifest.dim {
                return Err(corrupt(&vpath, "vectors do not match chunks.jsonl or manifest dim"));
            }
            if manifest.n != chunks.len() {
                return Err(corrupt(&mpath, format!("n = {} but {} chunks", manifest.n, chunks.len())));
            }
            let r = Retriever::new(params);
            r.install(chunks, sparse, Some(dense));
            Ok((r, manifest, LoadOutcome::Loaded))
        }
        (Binary::WrongVersion(v), _) | (_, Binary::WrongVersion(v)) => {
            let reason = format!("binary format {v} != {FORMAT_VERSION}");
            tracing::warn!(dir = %dir.display(), %reason, "rebuilding index");
            Ok((rebuild(chunks, params), manifest, LoadOutcome::Rebuilt { reason }))
        }
    }
}
