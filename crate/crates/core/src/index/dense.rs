//! Flat (exhaustive) cosine-similarity index.

use crate::providers::{cosine, EmbeddingVector, ModelId};

use super::IndexError;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    model: ModelId,
    dim: usize,
    pub(crate) ids: Vec<String>,
    pub(crate) vectors: Vec<EmbeddingVector>,
}

impl DenseIndex {
    pub fn new(model: ModelId, dim: usize) -> Self {
        Self { model, dim, ids: Vec::new(), vectors: Vec::new() }
    }

    pub fn model(&self) -> &ModelId {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn check_dim(&self, v: &EmbeddingVector) -> Result<(), IndexError> {
        if v.dim() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, got: v.dim() });
        }
        Ok(())
    }

    pub(crate) fn push(&mut self, id: String, v: EmbeddingVector) -> Result<(), IndexError> {
        self.check_dim(&v)?;
        self.ids.push(id);
        self.vectors.push(v);
        Ok(())
    }

    pub fn vector(&self, id: &str) -> Option<&EmbeddingVector> {
        self.ids.iter().position(|x| x == id).map(|i| &self.vectors[i])
    }

    /// Cosine similarity of the query against every stored vector.
    pub fn score_all(&self, query: &EmbeddingVector) -> Result<Vec<(String, f64)>, IndexError> {
        self.check_dim(query)?;
        Ok(self
            .ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| (id.clone(), cosine(query, v)))
            .collect())
    }
}
