//! Scriptable providers for tests, demos and fault injection.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::{
    check_generate_input, EmbeddingVector, Embedder, GenerationRequest, GenerationResponse,
    GenerationTask, Generator, ModelId, ProviderError,
};
use crate::text::whitespace_len;

type Script = dyn Fn(&GenerationRequest, usize) -> Result<String, ProviderError> + Send + Sync;

/// Generator whose output is computed by a closure. The closure also gets the
/// number of earlier calls with the same task, which makes "no then yes"
/// style scripts easy to write. Every request is recorded.
pub struct ScriptedGenerator {
    model: ModelId,
    max_context_tokens: usize,
    script: Box<Script>,
    log: Mutex<Vec<GenerationRequest>>,
    per_task: Mutex<HashMap<GenerationTask, usize>>,
}

impl ScriptedGenerator {
    pub fn new<F>(model: ModelId, script: F) -> Self
    where
        F: Fn(&GenerationRequest, usize) -> Result<String, ProviderError> + Send + Sync + 'static,
    {
        Self {
            model,
            max_context_tokens: 1 << 20,
            script: Box::new(script),
            log: Mutex::new(Vec::new()),
            per_task: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_max_context_tokens(mut self, limit: usize) -> Self {
        self.max_context_tokens = limit;
        self
    }

    pub fn requests(&self) -> Vec<GenerationRequest> {
        self.log.lock().expect("log poisoned").clone()
    }

    pub fn calls(&self) -> usize {
        self.log.lock().expect("log poisoned").len()
    }

    pub fn calls_for(&self, task: GenerationTask) -> usize {
        self.per_task.lock().expect("poisoned").get(&task).copied().unwrap_or(0)
    }
}

impl Generator for ScriptedGenerator {
    fn model(&self) -> &ModelId {
        &self.model
    }

    fn max_context_tokens(&self) -> usize {
        self.max_context_tokens
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError> {
        check_generate_input(req, self.max_context_tokens)?;
        self.log.lock().expect("log poisoned").push(req.clone());
        let nth = {
            let mut map = self.per_task.lock().expect("poisoned");
            let slot = map.entry(req.task).or_insert(0);
            *slot += 1;
            *slot - 1
        };
        let text = (self.script)(req, nth)?;
        Ok(GenerationResponse {
            prompt_tokens: req.input_tokens(),
            completion_tokens: whitespace_len(&text),
            text,
            latency_seconds: 0.0,
        })
    }
}

/// Embedder wrapper that fails on chosen calls.
pub struct FaultyEmbedder {
    inner: Arc<dyn Embedder>,
    fail_on_call: Option<usize>,
    fail_marker: Option<String>,
    calls: AtomicUsize,
}

impl FaultyEmbedder {
    /// Fails the `n`-th call (0-based); other calls pass through.
    pub fn failing_call(inner: Arc<dyn Embedder>, n: usize) -> Self {
        Self { inner, fail_on_call: Some(n), fail_marker: None, calls: AtomicUsize::new(0) }
    }

    /// Fails any call whose batch contains a text with `marker`.
    pub fn failing_on_text(inner: Arc<dyn Embedder>, marker: impl Into<String>) -> Self {
        Self { inner, fail_on_call: None, fail_marker: Some(marker.into()), calls: AtomicUsize::new(0) }
    }
}

impl Embedder for FaultyEmbedder {
    fn model(&self) -> &ModelId {
        self.inner.model()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        let marked = self
            .fail_marker
            .as_ref()
            .is_some_and(|m| texts.iter().any(|t| t.contains(m.as_str())));
        if self.fail_on_call == Some(n) || marked {
            return Err(ProviderError::Transport {
                endpoint: "fault-injection".into(),
                attempts: 1,
                message: "injected embedding failure".into(),
            });
        }
        self.inner.embed(texts)
    }
}
