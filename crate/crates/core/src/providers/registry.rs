//! Endpoint configuration and flag-driven model resolution.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::remote::{RemoteEmbedder, RemoteGenerator, RemoteSettings};
use super::{Embedder, Generator, ModelId, ProviderError, StubEmbedder, StubGenerator, Variant};

fn default_concurrency() -> usize {
    4
}

fn default_context() -> usize {
    8192
}

/// One model endpoint. `url` is `stub://embed`, `stub://extractive`, an
/// `http(s)://` base URL, or `env:NAME` to read the URL from the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default)]
    pub dim: Option<usize>,
    pub variant: Variant,
    #[serde(default)]
    pub prep_overhead_seconds: f64,
    #[serde(default = "default_context")]
    pub max_context_tokens: usize,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    /// Environment variable holding a bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleIds {
    pub base: String,
    pub fine_tuned: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roles {
    pub embedding: RoleIds,
    pub generation: RoleIds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoints: BTreeMap<String, EndpointConfig>,
    pub roles: Roles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedModels {
    pub embedding: ModelId,
    pub generation: ModelId,
}

impl ResolvedModels {
    pub fn prep_overhead_seconds(&self) -> f64 {
        self.embedding.prep_overhead_seconds + self.generation.prep_overhead_seconds
    }
}

impl ProviderConfig {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ProviderConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&raw).map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The shipped offline configuration: stub embedder and extractive generator,
    /// with fine-tuned variants as separately-salted stubs carrying overheads.
    pub fn stub_default() -> Self {
        let ep = |url: &str, dim: Option<usize>, variant, overhead| EndpointConfig {
            url: url.into(),
            dim,
            variant,
            prep_overhead_seconds: overhead,
            max_context_tokens: default_context(),
            max_concurrency: default_concurrency(),
            api_key_env: None,
        };
        let mut endpoints = BTreeMap::new();
        endpoints.insert("stub-embed".into(), ep("stub://embed", Some(64), Variant::Base, 0.0));
        endpoints.insert("stub-embed-ft".into(), ep("stub://embed", Some(64), Variant::FineTuned, 1800.0));
        endpoints.insert("stub-gen".into(), ep("stub://extractive", None, Variant::Base, 0.0));
        endpoints.insert("stub-gen-ft".into(), ep("stub://extractive", None, Variant::FineTuned, 7200.0));
        Self {
            endpoints,
            roles: Roles {
                embedding: RoleIds { base: "stub-embed".into(), fine_tuned: "stub-embed-ft".into() },
                generation: RoleIds { base: "stub-gen".into(), fine_tuned: "stub-gen-ft".into() },
            },
        }
    }

    fn model_id(&self, name: &str) -> Result<ModelId, ProviderError> {
        let ep = self
            .endpoints
            .get(name)
            .ok_or_else(|| ProviderError::Config(format!("no endpoint registered for model {name}")))?;
        let id = ModelId {
            name: name.to_string(),
            variant: ep.variant,
            prep_overhead_seconds: ep.prep_overhead_seconds,
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        for (role, ids) in [("embedding", &self.roles.embedding), ("generation", &self.roles.generation)] {
            for (slot, name, want) in [("base", &ids.base, Variant::Base), ("fine_tuned", &ids.fine_tuned, Variant::FineTuned)] {
                let id = self.model_id(name)?;
                if id.variant != want {
                    return Err(ProviderError::Config(format!(
                        "{role}.{slot} points at {name}, whose variant is {:?}",
                        id.variant
                    )));
                }
                if role == "embedding" && self.endpoints[name].dim.unwrap_or(0) == 0 {
                    return Err(ProviderError::Config(format!("embedding model {name} needs a positive dim")));
                }
            }
        }
        Ok(())
    }

    /// Picks fine-tuned ids for the roles whose flag is set.
    pub fn resolve(&self, ftr: bool, ftg: bool) -> Result<ResolvedModels, ProviderError> {
        let e = &self.roles.embedding;
        let g = &self.roles.generation;
        Ok(ResolvedModels {
            embedding: self.model_id(if ftr { &e.fine_tuned } else { &e.base })?,
            generation: self.model_id(if ftg { &g.fine_tuned } else { &g.base })?,
        })
    }
}

fn endpoint_url(raw: &str) -> Result<String, ProviderError> {
    match raw.strip_prefix("env:") {
        Some(var) => std::env::var(var)
            .map_err(|_| ProviderError::Config(format!("environment variable {var} is not set"))),
        None => Ok(raw.to_string()),
    }
}

fn settings(ep: &EndpointConfig, url: String) -> Result<RemoteSettings, ProviderError> {
    let mut s = RemoteSettings::new(url);
    s.max_concurrency = ep.max_concurrency;
    if let Some(var) = &ep.api_key_env {
        s.api_key = Some(
            std::env::var(var).map_err(|_| ProviderError::Config(format!("environment variable {var} is not set")))?,
        );
    }
    Ok(s)
}

/// Embedder and generator instances for one resolved configuration.
#[derive(Clone)]
pub struct ResolvedProviders {
    pub models: ResolvedModels,
    pub embedder: Arc<dyn Embedder>,
    pub generator: Arc<dyn Generator>,
}

/// Instantiated providers keyed by model name.
#[derive(Clone, Default)]
pub struct ProviderSet {
    config: Option<ProviderConfig>,
    embedders: BTreeMap<String, Arc<dyn Embedder>>,
    generators: BTreeMap<String, Arc<dyn Generator>>,
    roles: Option<Roles>,
}

impl ProviderSet {
    /// Builds every endpoint named by the config's roles. Unreachable remote
    /// endpoints are only detected at call time.
    pub fn from_config(config: &ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let mut set = ProviderSet {
            config: Some(config.clone()),
            roles: Some(config.roles.clone()),
            ..Default::default()
        };
        for name in [&config.roles.embedding.base, &config.roles.embedding.fine_tuned] {
            let ep = &config.endpoints[name];
            let model = config.model_id(name)?;
            let dim = ep.dim.unwrap_or(0);
            let url = endpoint_url(&ep.url)?;
            let e: Arc<dyn Embedder> = if url.starts_with("stub://") {
                Arc::new(StubEmbedder::new(model, dim))
            } else if url.starts_with("http://") || url.starts_with("https://") {
                Arc::new(RemoteEmbedder::new(model, dim, settings(ep, url)?)?)
            } else {
                return Err(ProviderError::Config(format!("unsupported embedding url {url}")));
            };
            set.embedders.insert(name.clone(), e);
        }
        for name in [&config.roles.generation.base, &config.roles.generation.fine_tuned] {
            let ep = &config.endpoints[name];
            let model = config.model_id(name)?;
            let url = endpoint_url(&ep.url)?;
            let g: Arc<dyn Generator> = if url.starts_with("stub://") {
                Arc::new(StubGenerator::new(model, ep.max_context_tokens))
            } else if url.starts_with("http://") || url.starts_with("https://") {
                Arc::new(RemoteGenerator::new(model, ep.max_context_tokens, settings(ep, url)?)?)
            } else {
                return Err(ProviderError::Config(format!("unsupported generation url {url}")));
            };
            set.generators.insert(name.clone(), g);
        }
        Ok(set)
    }

    /// Assembles a set from ready-made instances (tests, scripted demos).
    pub fn from_parts(
        embed_base: Arc<dyn Embedder>,
        embed_ft: Arc<dyn Embedder>,
        gen_base: Arc<dyn Generator>,
        gen_ft: Arc<dyn Generator>,
    ) -> Self {
        let roles = Roles {
            embedding: RoleIds { base: embed_base.model().name.clone(), fine_tuned: embed_ft.model().name.clone() },
            generation: RoleIds { base: gen_base.model().name.clone(), fine_tuned: gen_ft.model().name.clone() },
        };
        let mut set = ProviderSet { roles: Some(roles), ..Default::default() };
        for e in [embed_base, embed_ft] {
            set.embedders.insert(e.model().name.clone(), e);
        }
        for g in [gen_base, gen_ft] {
            set.generators.insert(g.model().name.clone(), g);
        }
        set
    }

    /// Same provider for base and fine-tuned slots.
    pub fn single(embedder: Arc<dyn Embedder>, generator: Arc<dyn Generator>) -> Self {
        Self::from_parts(embedder.clone(), embedder, generator.clone(), generator)
    }

    pub fn config(&self) -> Option<&ProviderConfig> {
        self.config.as_ref()
    }

    pub fn resolve(&self, ftr: bool, ftg: bool) -> Result<ResolvedProviders, ProviderError> {
        let roles = self
            .roles
            .as_ref()
            .ok_or_else(|| ProviderError::Config("provider set has no roles".into()))?;
        let ename = if ftr { &roles.embedding.fine_tuned } else { &roles.embedding.base };
        let gname = if ftg { &roles.generation.fine_tuned } else { &roles.generation.base };
        let embedder = self
            .embedders
            .get(ename)
            .cloned()
            .ok_or_else(|| ProviderError::Config(format!("missing registry entry for embedding model {ename}")))?;
        let generator = self
            .generators
            .get(gname)
            .cloned()
            .ok_or_else(|| ProviderError::Config(format!("missing registry entry for generation model {gname}")))?;
        Ok(ResolvedProviders {
            models: ResolvedModels {
                embedding: embedder.model().clone(),
                generation: generator.model().clone(),
            },
            embedder,
            generator,
        })
    }

    /// The base embedder, used for semantic-similarity scoring.
    pub fn base_embedder(&self) -> Result<Arc<dyn Embedder>, ProviderError> {
        Ok(self.resolve(false, false)?.embedder)
    }
}
