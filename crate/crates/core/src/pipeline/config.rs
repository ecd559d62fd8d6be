use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::index::DEFAULT_K;

pub const DEFAULT_MAX_ADAPTIVE_ITERS: usize = 5;
pub const DEFAULT_FAN_OUT: usize = 3;
pub const DEFAULT_FIXED_ROUNDS: usize = 3;

/// One column of the configuration matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub config_id: String,
    /// 1 is pure dense retrieval, 0 pure BM25.
    pub alpha: f64,
    #[serde(rename = "FTR", default)]
    pub ftr: bool,
    #[serde(rename = "FTG", default)]
    pub ftg: bool,
    #[serde(rename = "UA", default)]
    pub ua: bool,
    #[serde(rename = "DA", default)]
    pub da: bool,
    #[serde(rename = "FIR", default)]
    pub fir: bool,
    #[serde(rename = "AIR", default)]
    pub air: bool,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_iters")]
    pub max_adaptive_iters: usize,
    #[serde(default = "default_fan_out")]
    pub fan_out: usize,
    #[serde(default = "default_rounds")]
    pub fixed_rounds: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    DEFAULT_K
}
fn default_iters() -> usize {
    DEFAULT_MAX_ADAPTIVE_ITERS
}
fn default_fan_out() -> usize {
    DEFAULT_FAN_OUT
}
fn default_rounds() -> usize {
    DEFAULT_FIXED_ROUNDS
}

impl PipelineConfig {
    /// Baseline with every technique off.
    pub fn baseline(config_id: impl Into<String>, alpha: f64) -> Self {
        Self {
            config_id: config_id.into(),
            alpha,
            ftr: false,
            ftg: false,
            ua: false,
            da: false,
            fir: false,
            air: false,
            k: DEFAULT_K,
            max_adaptive_iters: DEFAULT_MAX_ADAPTIVE_ITERS,
            fan_out: DEFAULT_FAN_OUT,
            fixed_rounds: DEFAULT_FIXED_ROUNDS,
            seed: 0,
        }
    }

    /// Every violated rule, empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.config_id.trim().is_empty() || self.config_id.contains(['/', '\\']) || self.config_id.contains("..") {
            p.push(format!("config_id {:?} must be a non-empty plain name", self.config_id));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            p.push(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if self.ua && self.da {
            p.push("UA and DA are mutually exclusive".into());
        }
        if self.fir && self.air {
            p.push("FIR and AIR are mutually exclusive".into());
        }
        for (name, v) in [
            ("k", self.k),
            ("max_adaptive_iters", self.max_adaptive_iters),
            ("fan_out", self.fan_out),
            ("fixed_rounds", self.fixed_rounds),
        ] {
            if v == 0 {
                p.push(format!("{name} must be >= 1"));
            }
        }
        p
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::InvalidConfig { config_id: self.config_id.clone(), problems })
        }
    }

    /// Technique labels present in this config, e.g. `["FTR", "AIR"]`.
    pub fn techniques(&self) -> Vec<&'static str> {
        [("FTR", self.ftr), ("FTG", self.ftg), ("UA", self.ua), ("DA", self.da), ("FIR", self.fir), ("AIR", self.air)]
            .into_iter()
            .filter_map(|(n, on)| on.then_some(n))
            .collect()
    }

    pub fn is_dense(&self) -> bool {
        self.alpha == 1.0
    }
}

/// Validates every config and reports all problems at once, including
/// duplicate ids.
pub fn validate_all(configs: &[PipelineConfig]) -> Result<(), PipelineError> {
    let mut problems = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for c in configs {
        for p in c.problems() {
            problems.push(format!("{}: {p}", c.config_id));
        }
        if !seen.insert(c.config_id.as_str()) {
            problems.push(format!("{}: duplicate config_id", c.config_id));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::InvalidMatrix { problems })
    }
}
