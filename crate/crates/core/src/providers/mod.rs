//! Embedding and generation provider contracts.
//!
//! Pipelines reach models only through [`Embedder::embed`] and
//! [`Generator::generate`]. Stubs in [`stub`] make every path runnable
//! offline; [`remote`] speaks the JSON-over-HTTP contract; [`registry`]
//! maps technique flags to concrete model endpoints.

pub mod registry;
pub mod remote;
pub mod scripted;
pub mod stub;

use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use registry::{EndpointConfig, ProviderConfig, ProviderSet, ResolvedModels, ResolvedProviders, RoleIds};
pub use scripted::{FaultyEmbedder, ScriptedGenerator};
pub use stub::{StubEmbedder, StubGenerator, REFUSAL};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("endpoint {endpoint} unavailable after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("provider configuration error: {0}")]
    Config(String),
    #[error("input of {size} tokens exceeds the context limit of {limit} tokens")]
    InputTooLarge { limit: usize, size: usize },
    #[error("invalid provider input: {0}")]
    InvalidInput(String),
    #[error("malformed provider response: {0}")]
    Protocol(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    FineTuned,
}

/// Logical model identity. Fine-tuned variants carry their preparation cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelId {
    pub name: String,
    pub variant: Variant,
    pub prep_overhead_seconds: f64,
}

impl ModelId {
    pub fn base(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variant: Variant::Base,
            prep_overhead_seconds: 0.0,
        }
    }

    pub fn fine_tuned(name: impl Into<String>, prep_overhead_seconds: f64) -> Self {
        Self {
            name: name.into(),
            variant: Variant::FineTuned,
            prep_overhead_seconds,
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.name.trim().is_empty() {
            return Err(ProviderError::Config("model name is empty".into()));
        }
        if !self.prep_overhead_seconds.is_finite() || self.prep_overhead_seconds < 0.0 {
            return Err(ProviderError::Config(format!(
                "model {}: prep overhead must be a non-negative number of seconds",
                self.name
            )));
        }
        if self.variant == Variant::Base && self.prep_overhead_seconds != 0.0 {
            return Err(ProviderError::Config(format!(
                "model {}: base variants carry no preparation overhead",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt()
    }
}

pub fn dot(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    dot(a, b) / denom
}

pub trait Embedder: Send + Sync {
    fn model(&self) -> &ModelId;
    fn dim(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

/// What a generation call is for. Remote servers may ignore it; the stub
/// generator uses it to pick its deterministic behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GenerationTask {
    #[default]
    Answer,
    StepBack,
    Clarify,
    Decompose,
    Judge,
    Synthesize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub context_passages: Vec<String>,
    pub max_tokens: usize,
    pub temperature: f64,
    #[serde(default)]
    pub task: GenerationTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(task: GenerationTask, prompt: impl Into<String>, context_passages: Vec<String>) -> Self {
        Self {
            prompt: prompt.into(),
            context_passages,
            max_tokens: 256,
            temperature: 0.0,
            task,
            seed: None,
        }
    }

    /// Whitespace tokens across the prompt and every context passage.
    pub fn input_tokens(&self) -> usize {
        crate::text::whitespace_len(&self.prompt)
            + self
                .context_passages
                .iter()
                .map(|p| crate::text::whitespace_len(p))
                .sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub latency_seconds: f64,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

pub trait Generator: Send + Sync {
    fn model(&self) -> &ModelId;
    fn max_context_tokens(&self) -> usize;
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError>;
}

pub(crate) fn check_embed_input(texts: &[String]) -> Result<(), ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::InvalidInput("no texts to embed".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(ProviderError::InvalidInput(format!("text {i} is empty")));
    }
    Ok(())
}

pub(crate) fn check_generate_input(req: &GenerationRequest, limit: usize) -> Result<(), ProviderError> {
    if req.prompt.trim().is_empty() {
        return Err(ProviderError::InvalidInput("prompt is empty".into()));
    }
    let size = req.input_tokens();
    if size > limit {
        return Err(ProviderError::InputTooLarge { limit, size });
    }
    Ok(())
}

/// Counting semaphore bounding concurrent requests per endpoint.
#[derive(Debug)]
pub struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.permits.lock().expect("semaphore poisoned");
        while *n == 0 {
            n = self.cv.wait(n).expect("semaphore poisoned");
        }
        *n -= 1;
        Permit { sem: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.sem.permits.lock().expect("semaphore poisoned");
        *n += 1;
        self.sem.cv.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_models_have_no_overhead() {
        assert!(ModelId::base("m").validate().is_ok());
        let mut bad = ModelId::base("m");
        bad.prep_overhead_seconds = 3.0;
        assert!(bad.validate().is_err());
        assert!(ModelId::fine_tuned("m", -1.0).validate().is_err());
        assert!(ModelId::fine_tuned("m", 3600.0).validate().is_ok());
    }

    #[test]
    fn cosine_of_zero_vector_is_zero() {
        let z = EmbeddingVector::new(vec![0.0, 0.0]);
        let a = EmbeddingVector::new(vec![1.0, 0.0]);
        assert_eq!(cosine(&z, &a), 0.0);
        assert_eq!(cosine(&a, &a), 1.0);
    }

    #[test]
    fn request_wire_format() {
        let mut req = GenerationRequest::new(GenerationTask::Judge, "p", vec!["c".into()]);
        req.seed = Some(7);
        let json = serde_json::to_string(&req).unwrap();
        assert_eq!(
            json,
            r#"{"prompt":"p","context_passages":["c"],"max_tokens":256,"temperature":0.0,"task":"judge","seed":7}"#
        );
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let sem = Semaphore::new(2);
        let active = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let _p = sem.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(std::time::Duration::from_millis(5));
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
