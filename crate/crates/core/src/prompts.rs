//! Versioned prompt templates.
//!
//! Templates use `{name}` placeholders. Every template that carries a
//! question ends with a `Question: ...` line so extractive providers can find
//! it. The built-in set is compiled in; a directory of `<name>.txt` files can
//! override individual templates.

use std::path::Path;

use serde::{Deserialize, Serialize};

pub const BUILTIN_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompts {
    pub version: String,
    pub answer: String,
    pub step_back: String,
    pub clarify: String,
    pub decompose: String,
    pub demonstrations: String,
    pub judge: String,
    pub final_adaptive: String,
    pub synthesize: String,
}

impl Default for Prompts {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Prompts {
    pub fn builtin() -> Self {
        Self {
            version: BUILTIN_VERSION.into(),
            answer: include_str!("../assets/prompts/answer.v1.txt").into(),
            step_back: include_str!("../assets/prompts/step_back.v1.txt").into(),
            clarify: include_str!("../assets/prompts/clarify.v1.txt").into(),
            decompose: include_str!("../assets/prompts/decompose.v1.txt").into(),
            demonstrations: include_str!("../assets/prompts/demonstrations.v1.txt").into(),
            judge: include_str!("../assets/prompts/judge.v1.txt").into(),
            final_adaptive: include_str!("../assets/prompts/final_adaptive.v1.txt").into(),
            synthesize: include_str!("../assets/prompts/synthesize.v1.txt").into(),
        }
    }

    /// Built-in templates overridden by any `<name>.txt` found in `dir`.
    /// The version becomes `custom:<dir name>` when anything is overridden.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut p = Self::builtin();
        let mut changed = false;
        for (name, slot) in [
            ("answer", &mut p.answer),
            ("step_back", &mut p.step_back),
            ("clarify", &mut p.clarify),
            ("decompose", &mut p.decompose),
            ("demonstrations", &mut p.demonstrations),
            ("judge", &mut p.judge),
            ("final_adaptive", &mut p.final_adaptive),
            ("synthesize", &mut p.synthesize),
        ] {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *slot = std::fs::read_to_string(&path)?;
                changed = true;
            }
        }
        if changed {
            let tag = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            p.version = format!("custom:{tag}");
        }
        Ok(p)
    }
}

/// Replaces each `{key}` with its value. Unknown placeholders are left as is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn question_line_is_last() {
        let p = Prompts::builtin();
        for t in [&p.answer, &p.step_back, &p.clarify, &p.decompose, &p.judge, &p.final_adaptive] {
            let r = render(t, &[("question", "Who supplies lithium?"), ("notes", ""), ("fan_out", "3")]);
            let last = r.lines().rev().find(|l| l.trim_start().starts_with("Question:")).unwrap();
            assert_eq!(last.trim(), "Question: Who supplies lithium?");
        }
    }

    #[test]
    fn overrides_replace_named_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("judge.txt"), "J {question}").unwrap();
        let p = Prompts::with_overrides(dir.path()).unwrap();
        assert_eq!(p.judge, "J {question}");
        assert_eq!(p.answer, Prompts::builtin().answer);
        assert!(p.version.starts_with("custom:"));
    }
}
