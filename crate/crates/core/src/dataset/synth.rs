use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Provenance, QATriplet};
use crate::corpus::Chunk;
use crate::prompts::Prompts;
use crate::providers::{GenerationRequest, GenerationTask, Generator, ProviderError};

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub triplets: Vec<QATriplet>,
    /// Generations that did not follow the `Question:`/`Answer:` format.
    pub malformed: usize,
}

fn parse(text: &str) -> Option<(String, String)> {
    let mut question = None;
    let mut answer = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(q) = line.strip_prefix("Question:") {
            question.get_or_insert_with(|| q.trim().to_string());
        } else if let Some(a) = line.strip_prefix("Answer:") {
            answer.get_or_insert_with(|| a.trim().to_string());
        }
    }
    match (question, answer) {
        (Some(q), Some(a)) if !q.is_empty() && !a.is_empty() => Some((q, a)),
        _ => None,
    }
}

/// Generates up to `n` synthetic triplets from a seeded sample of chunks.
///
/// The passage of each triplet is the source chunk's text. Output is sorted
/// by source chunk id. Malformed generations are skipped and counted; only
/// provider failures are errors.
pub fn synthesize_triplets(
    chunks: &[Chunk],
    n: usize,
    generator: &dyn Generator,
    prompts: &Prompts,
    seed: u64,
) -> Result<Synthesis, ProviderError> {
    let mut sorted: Vec<&Chunk> = chunks.iter().collect();
    sorted.sort_by(|a, b| a.chunk_id.cmp(&b.chunk_id));
    let take = n.min(sorted.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, sorted.len(), take).into_vec();
    picks.sort_unstable();

    let mut out = Synthesis { triplets: Vec::new(), malformed: 0 };
    for i in picks {
        let chunk = sorted[i];
        let mut req = GenerationRequest::new(GenerationTask::Synthesize, prompts.synthesize.clone(), vec![chunk.text.clone()]);
        req.seed = Some(seed);
        let text = generator.generate(&req)?.text;
        match parse(&text) {
            Some((question, answer)) => out.triplets.push(QATriplet {
                id: format!("syn-{}", chunk.chunk_id),
                question,
                gold_passage: chunk.text.clone(),
                gold_chunk_ref: Some(chunk.chunk_id.clone()),
                answer,
                provenance: Provenance::Synthetic,
                tags: Default::default(),
            }),
            None => out.malformed += 1,
        }
    }
    if out.triplets.is_empty() && out.malformed > 0 {
        tracing::warn!(malformed = out.malformed, "every synthetic generation was malformed");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{ModelId, ScriptedGenerator, StubGenerator};

    fn chunks(n: usize) -> Vec<Chunk> {
        (0..n)
            .map(|i| Chunk {
                chunk_id: format!("acc:{i:05}"),
                text: format!("Acme supplies lithium batteries number {i} to the company."),
                token_span: (0, 9),
                filing_ref: "acc".into(),
                filed_at: "2024-01-01T00:00:00Z".parse().unwrap(),
            })
            .collect()
    }

    #[test]
    fn passage_is_source_chunk() {
        let g = StubGenerator::new(ModelId::base("g"), 4096);
        let c = chunks(5);
        let s = synthesize_triplets(&c, 2, &g, &Prompts::builtin(), 7).unwrap();
        assert_eq!(s.triplets.len(), 2);
        for t in &s.triplets {
            let src = c.iter().find(|c| Some(&c.chunk_id) == t.gold_chunk_ref.as_ref()).unwrap();
            assert_eq!(t.gold_passage, src.text);
            assert_eq!(t.provenance, Provenance::Synthetic);
        }
        assert!(s.triplets.windows(2).all(|w| w[0].gold_chunk_ref < w[1].gold_chunk_ref));
    }

    #[test]
    fn zero_requested_is_empty() {
        let g = StubGenerator::new(ModelId::base("g"), 4096);
        let s = synthesize_triplets(&chunks(3), 0, &g, &Prompts::builtin(), 1).unwrap();
        assert_eq!(s, Synthesis { triplets: vec![], malformed: 0 });
    }

    #[test]
    fn malformed_generation_skipped() {
        let g = ScriptedGenerator::new(ModelId::base("g"), |_, nth| {
            Ok(if nth == 1 { "no format here".to_string() } else { format!("Question: q{nth}?\nAnswer: a{nth}") })
        });
        let s = synthesize_triplets(&chunks(3), 3, &g, &Prompts::builtin(), 1).unwrap();
        assert_eq!((s.triplets.len(), s.malformed), (2, 1));
    }
}
