//! JSON-over-HTTP providers.
//!
//! `POST {url}/embed` with `{"model": .., "texts": [..]}` answers
//! `{"vectors": [[..], ..]}`. `POST {url}/generate` with the model name plus
//! the [`GenerationRequest`] fields answers `{"text": .., "prompt_tokens": ..,
//! "completion_tokens": ..}` (token counts optional).

use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{
    check_embed_input, check_generate_input, EmbeddingVector, Embedder, GenerationRequest,
    GenerationResponse, Generator, ModelId, ProviderError, Semaphore,
};
use crate::text::whitespace_len;

#[derive(Debug, Clone)]
pub struct RemoteSettings {
    pub url: String,
    pub api_key: Option<String>,
    pub max_concurrency: usize,
    pub retries: u32,
    pub retry_delay: Duration,
    pub timeout: Duration,
}

impl RemoteSettings {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key: None,
            max_concurrency: 4,
            retries: 2,
            retry_delay: Duration::from_millis(200),
            timeout: Duration::from_secs(120),
        }
    }
}

struct Endpoint {
    settings: RemoteSettings,
    client: Client,
    gate: Semaphore,
}

impl Endpoint {
    fn new(settings: RemoteSettings) -> Result<Self, ProviderError> {
        let client = Client::builder()
            .timeout(settings.timeout)
            .build()
            .map_err(|e| ProviderError::Config(format!("http client: {e}")))?;
        Ok(Self {
            gate: Semaphore::new(settings.max_concurrency),
            settings,
            client,
        })
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(&self, path: &str, body: &B) -> Result<R, ProviderError> {
        let url = format!("{}/{}", self.settings.url.trim_end_matches('/'), path);
        let _permit = self.gate.acquire();
        let attempts = self.settings.retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            let mut rb = self.client.post(&url).json(body);
            if let Some(key) = &self.settings.api_key {
                rb = rb.bearer_auth(key);
            }
            match rb.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<R>()
                            .map_err(|e| ProviderError::Protocol(format!("{url}: {e}")));
                    }
                    last = format!("HTTP {status}");
                    if !(status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS) {
                        return Err(ProviderError::Protocol(format!("{url}: {last}")));
                    }
                }
                Err(e) => last = e.to_string(),
            }
            if attempt < attempts {
                tracing::warn!(%url, attempt, error = %last, "provider request failed, retrying");
                std::thread::sleep(self.settings.retry_delay * attempt);
            }
        }
        Err(ProviderError::Transport {
            endpoint: url,
            attempts,
            message: last,
        })
    }
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    model: &'a str,
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f32>>,
}

pub struct RemoteEmbedder {
    model: ModelId,
    dim: usize,
    endpoint: Endpoint,
}

impl RemoteEmbedder {
    pub fn new(model: ModelId, dim: usize, settings: RemoteSettings) -> Result<Self, ProviderError> {
        Ok(Self { model, dim, endpoint: Endpoint::new(settings)? })
    }
}

impl Embedder for RemoteEmbedder {
    fn model(&self) -> &ModelId {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        check_embed_input(texts)?;
        let reply: EmbedReply = self.endpoint.post("embed", &EmbedBody { model: &self.model.name, texts })?;
        if reply.vectors.len() != texts.len() {
            return Err(ProviderError::Protocol(format!(
                "expected {} vectors, got {}",
                texts.len(),
                reply.vectors.len()
            )));
        }
        if let Some(v) = reply.vectors.iter().find(|v| v.len() != self.dim) {
            return Err(ProviderError::Config(format!(
                "model {} returned dimension {} but the registry declares {}",
                self.model.name,
                v.len(),
                self.dim
            )));
        }
        Ok(reply.vectors.into_iter().map(EmbeddingVector::new).collect())
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    model: &'a str,
    #[serde(flatten)]
    request: &'a GenerationRequest,
}

#[derive(Deserialize)]
struct GenerateReply {
    text: String,
    #[serde(default)]
    prompt_tokens: Option<usize>,
    #[serde(default)]
    completion_tokens: Option<usize>,
}

pub struct RemoteGenerator {
    model: ModelId,
    max_context_tokens: usize,
    endpoint: Endpoint,
}

impl RemoteGenerator {
    pub fn new(model: ModelId, max_context_tokens: usize, settings: RemoteSettings) -> Result<Self, ProviderError> {
        Ok(Self { model, max_context_tokens, endpoint: Endpoint::new(settings)? })
    }
}

impl Generator for RemoteGenerator {
    fn model(&self) -> &ModelId {
        &self.model
    }

    fn max_context_tokens(&self) -> usize {
        self.max_context_tokens
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError> {
        check_generate_input(req, self.max_context_tokens)?;
        let started = Instant::now();
        let reply: GenerateReply = self
            .endpoint
            .post("generate", &GenerateBody { model: &self.model.name, request: req })?;
        Ok(GenerationResponse {
            prompt_tokens: reply.prompt_tokens.unwrap_or_else(|| req.input_tokens()),
            completion_tokens: reply.completion_tokens.unwrap_or_else(|| whitespace_len(&reply.text)),
            text: reply.text,
            latency_seconds: started.elapsed().as_secs_f64(),
        })
    }
}
