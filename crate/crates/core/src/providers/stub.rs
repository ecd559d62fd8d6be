//! Deterministic offline providers.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::text::{content_terms, sentences, terms, whitespace_len};

use super::{
    check_embed_input, check_generate_input, EmbeddingVector, Embedder, GenerationRequest,
    GenerationResponse, GenerationTask, Generator, ModelId, ProviderError,
};

/// Fixed refusal emitted when the context cannot support an answer.
pub const REFUSAL: &str = "I cannot answer from the provided context.";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0xff;
            h = h.wrapping_mul(FNV_PRIME);
        }
        for b in *part {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Bag-of-words embedder: mean of per-token pseudo-random unit vectors,
/// renormalized. Token vectors are seeded by a stable hash of the model
/// name and the token, so different model ids give different spaces.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    model: ModelId,
    dim: usize,
}

impl StubEmbedder {
    pub fn new(model: ModelId, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { model, dim }
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let seed = fnv1a(&[self.model.name.as_bytes(), token.as_bytes()]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        v
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut tokens = terms(text);
        if tokens.is_empty() {
            tokens.push(text.trim().to_string());
        }
        // sorted so the float sum depends only on the token multiset
        tokens.sort_unstable();
        let mut acc = vec![0.0f64; self.dim];
        for t in &tokens {
            for (a, x) in acc.iter_mut().zip(self.token_vector(t)) {
                *a += x;
            }
        }
        let n = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            // opposite token vectors cancelled; fall back to the first token
            acc = self.token_vector(&tokens[0]);
        } else {
            acc.iter_mut().for_each(|x| *x /= n);
        }
        EmbeddingVector::new(acc.into_iter().map(|x| x as f32).collect())
    }
}

impl Embedder for StubEmbedder {
    fn model(&self) -> &ModelId {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        check_embed_input(texts)?;
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Extractive generator.
///
/// For answering, it returns the context sentence with the largest
/// content-word overlap with the question (earliest wins ties) and refuses
/// when there is no context or no overlap. The question is read from the
/// last `Question:` line of the prompt. Other tasks produce templated,
/// deterministic outputs in the formats the pipeline parses.
#[derive(Debug, Clone)]
pub struct StubGenerator {
    model: ModelId,
    max_context_tokens: usize,
}

impl StubGenerator {
    pub fn new(model: ModelId, max_context_tokens: usize) -> Self {
        Self { model, max_context_tokens }
    }

    fn respond(&self, req: &GenerationRequest) -> String {
        let question = question_line(&req.prompt);
        match req.task {
            GenerationTask::Answer => extract_answer(question, &req.context_passages),
            GenerationTask::StepBack => {
                let t = content_terms(question);
                if t.is_empty() {
                    return REFUSAL.to_string();
                }
                let topic = t.iter().take(2).cloned().collect::<Vec<_>>().join(" ");
                format!("What general factors and background explain {topic}?")
            }
            GenerationTask::Clarify | GenerationTask::Decompose => {
                let t = content_terms(question);
                if t.is_empty() {
                    return REFUSAL.to_string();
                }
                t.iter()
                    .take(5)
                    .enumerate()
                    .map(|(i, term)| format!("{}. What does the filing disclose about {term}?", i + 1))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            GenerationTask::Judge => {
                let wanted = content_terms(question);
                let have: std::collections::HashSet<String> =
                    req.context_passages.iter().flat_map(|p| terms(p)).collect();
                let covered = wanted.iter().filter(|w| have.contains(*w)).count();
                if !wanted.is_empty() && 2 * covered >= wanted.len() {
                    "Yes".to_string()
                } else {
                    "No".to_string()
                }
            }
            GenerationTask::Synthesize => {
                let passage = req.context_passages.join(" ");
                let best = sentences(&passage)
                    .into_iter()
                    .find(|s| content_terms(s).len() >= 3);
                match best {
                    Some(sentence) => {
                        let t = content_terms(&sentence);
                        format!(
                            "Question: What does the filing state about {} and {}?\nAnswer: {}",
                            t[0], t[1], sentence
                        )
                    }
                    None => REFUSAL.to_string(),
                }
            }
        }
    }
}

fn question_line(prompt: &str) -> &str {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix("Question:"))
        .map(str::trim)
        .unwrap_or(prompt)
}

fn extract_answer(question: &str, context: &[String]) -> String {
    let wanted: std::collections::HashSet<String> = content_terms(question).into_iter().collect();
    let mut best: Option<(usize, String)> = None;
    for passage in context {
        for sentence in sentences(passage) {
            let overlap = content_terms(&sentence).iter().filter(|t| wanted.contains(*t)).count();
            if overlap > 0 && best.as_ref().map_or(true, |(b, _)| overlap > *b) {
                best = Some((overlap, sentence));
            }
        }
    }
    best.map(|(_, s)| s).unwrap_or_else(|| REFUSAL.to_string())
}

impl Generator for StubGenerator {
    fn model(&self) -> &ModelId {
        &self.model
    }

    fn max_context_tokens(&self) -> usize {
        self.max_context_tokens
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError> {
        let started = Instant::now();
        check_generate_input(req, self.max_context_tokens)?;
        let text = self.respond(req);
        Ok(GenerationResponse {
            prompt_tokens: req.input_tokens(),
            completion_tokens: whitespace_len(&text),
            text,
            latency_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::cosine;

    fn embedder() -> StubEmbedder {
        StubEmbedder::new(ModelId::base("stub-embed"), 64)
    }

    fn gen() -> StubGenerator {
        StubGenerator::new(ModelId::base("stub-gen"), 4096)
    }

    fn ask(q: &str, ctx: &[&str]) -> String {
        let req = GenerationRequest::new(
            GenerationTask::Answer,
            format!("Answer from the context.\nQuestion: {q}"),
            ctx.iter().map(|s| s.to_string()).collect(),
        );
        gen().generate(&req).unwrap().text
    }

    #[test]
    fn embed_is_deterministic_and_pure() {
        let e = embedder();
        let a = e.embed(&["abc".into()]).unwrap();
        let b = e.embed(&["abc".into()]).unwrap();
        assert_eq!(a, b);
        let pair = e.embed(&["abc".into(), "abc".into()]).unwrap();
        assert_eq!(pair[0], pair[1]);
    }

    #[test]
    fn embed_is_unit_norm_and_bag_of_words() {
        let e = embedder();
        let v = e.embed(&["a b".into(), "b a".into(), "quarterly dividend".into()]).unwrap();
        assert_eq!(v[0], v[1]);
        for x in &v {
            assert!((x.norm() - 1.0).abs() < 1e-6);
            assert_eq!(x.dim(), 64);
        }
    }

    #[test]
    fn shared_tokens_raise_similarity() {
        let e = embedder();
        let v = e
            .embed(&["supply chain risk".into(), "supply chain risks".into(), "quarterly dividend".into()])
            .unwrap();
        assert!(cosine(&v[0], &v[1]) > cosine(&v[0], &v[2]));
    }

    #[test]
    fn embed_rejects_empty_inputs() {
        let e = embedder();
        assert!(matches!(e.embed(&[]), Err(ProviderError::InvalidInput(_))));
        assert!(matches!(e.embed(&["  ".into()]), Err(ProviderError::InvalidInput(_))));
        // punctuation-only text still embeds
        assert!(e.embed(&["!!!".into()]).is_ok());
    }

    #[test]
    fn extractive_answer_picks_max_overlap() {
        assert_eq!(
            ask("Who supplies lithium?", &["Acme supplies lithium to us.", "Revenue rose."]),
            "Acme supplies lithium to us."
        );
    }

    #[test]
    fn refuses_without_context() {
        assert_eq!(ask("Who supplies lithium?", &[]), REFUSAL);
        assert_eq!(ask("Who supplies lithium?", &["Revenue rose."]), REFUSAL);
    }

    #[test]
    fn deterministic_at_temperature_zero() {
        let req = GenerationRequest::new(GenerationTask::Answer, "Question: x y", vec!["x y z.".into()]);
        let g = gen();
        assert_eq!(g.generate(&req).unwrap().text, g.generate(&req).unwrap().text);
    }

    #[test]
    fn context_overflow_names_limit() {
        let g = StubGenerator::new(ModelId::base("g"), 3);
        let req = GenerationRequest::new(GenerationTask::Answer, "Question: a b c d", vec![]);
        match g.generate(&req) {
            Err(ProviderError::InputTooLarge { limit, size }) => {
                assert_eq!(limit, 3);
                assert_eq!(size, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structured_tasks() {
        let g = gen();
        let sb = g
            .generate(&GenerationRequest::new(GenerationTask::StepBack, "Question: how much paint do I need to paint this wall?", vec![]))
            .unwrap()
            .text;
        assert_ne!(sb, "how much paint do I need to paint this wall?");
        assert!(sb.ends_with('?'));

        let judge = |ctx: &str| {
            g.generate(&GenerationRequest::new(GenerationTask::Judge, "Question: who supplies lithium", vec![ctx.into()]))
                .unwrap()
                .text
        };
        assert_eq!(judge("Acme supplies lithium."), "Yes");
        assert_eq!(judge("Revenue rose."), "No");

        let syn = g
            .generate(&GenerationRequest::new(
                GenerationTask::Synthesize,
                "Write a question.",
                vec!["Acme supplies lithium batteries to the company.".into()],
            ))
            .unwrap()
            .text;
        assert!(syn.starts_with("Question: "));
        assert!(syn.contains("\nAnswer: Acme supplies lithium batteries to the company."));
    }
}
