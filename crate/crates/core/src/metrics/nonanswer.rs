use serde::{Deserialize, Serialize};

pub const DEFAULT_PATTERNS_VERSION: u32 = 1;

/// Blank or refusal detection by case-insensitive substring patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonAnswerDetector {
    pub version: u32,
    pub patterns: Vec<String>,
}

impl Default for NonAnswerDetector {
    fn default() -> Self {
        Self {
            version: DEFAULT_PATTERNS_VERSION,
            patterns: [
                "cannot answer",
                "can't answer",
                "do not have enough information",
                "no information available",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

impl NonAnswerDetector {
    pub fn with_patterns(version: u32, patterns: Vec<String>) -> Self {
        Self {
            version,
            patterns: patterns.into_iter().map(|p| p.to_lowercase()).collect(),
        }
    }

    pub fn is_non_answer(&self, candidate: &str) -> bool {
        if candidate.trim().is_empty() {
            return true;
        }
        let lowered = candidate.to_lowercase();
        self.patterns.iter().any(|p| lowered.contains(&p.to_lowercase()))
    }

    pub fn count<'a>(&self, candidates: impl IntoIterator<Item = &'a str>) -> usize {
        candidates.into_iter().filter(|c| self.is_non_answer(c)).count()
    }
}

/// Non-answer check with the default pattern list.
pub fn detect_non_answer(candidate: &str) -> bool {
    NonAnswerDetector::default().is_non_answer(candidate)
}
