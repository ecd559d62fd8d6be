//! The structured file that pins every input of a run.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use ragtrade::pipeline::TimingMode;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Problems};

/// Inputs of one run. Relative paths resolve against the manifest's own
/// directory. Without `provider_config_path` the built-in stub providers
/// are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub run_id: String,
    pub config_matrix_path: PathBuf,
    pub dataset_path: PathBuf,
    pub index_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_config_path: Option<PathBuf>,
    /// Added to every config's own seed.
    #[serde(default)]
    pub seed: u64,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts_dir: Option<PathBuf>,
}

impl RunManifest {
    /// Reads TOML, or JSON when the extension is `.json`, and makes every
    /// path absolute.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let mut m: RunManifest = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&raw).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.resolve_paths(&base);
        Ok(m)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.config_matrix_path);
        abs(&mut self.dataset_path);
        abs(&mut self.index_path);
        if let Some(p) = self.provider_config_path.as_mut() {
            abs(p);
        }
        if let Some(p) = self.prompts_dir.as_mut() {
            abs(p);
        }
    }

    /// Every problem with the manifest itself, without reading the inputs.
    pub fn check(&self, problems: &mut Problems) {
        let id_ok = !self.run_id.is_empty()
            && self.run_id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.run_id.starts_with('.');
        if !id_ok {
            problems.push(CliError::validation(format!(
                "run_id {:?} must be non-empty and use [A-Za-z0-9._-]",
                self.run_id
            )));
        }
        let mut paths = vec![
            ("config_matrix_path", &self.config_matrix_path),
            ("dataset_path", &self.dataset_path),
            ("index_path", &self.index_path),
        ];
        if let Some(p) = &self.provider_config_path {
            paths.push(("provider_config_path", p));
        }
        if let Some(p) = &self.prompts_dir {
            paths.push(("prompts_dir", p));
        }
        for (field, p) in paths {
            if !p.exists() {
                problems.push(CliError::validation(format!("{field} {} does not exist", p.display())));
            }
        }
        if self.workers == Some(0) {
            problems.push(CliError::validation("workers must be at least 1"));
        }
    }
}
