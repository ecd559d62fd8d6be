#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ragtrade::corpus::Chunk;
use ragtrade::index::{Bm25Params, Retriever};
use ragtrade::providers::{
    Embedder, GenerationRequest, GenerationTask, Generator, ModelId, ProviderError, ProviderSet, ScriptedGenerator,
    StubEmbedder, StubGenerator,
};

pub fn chunk(id: &str, text: &str) -> Chunk {
    Chunk {
        chunk_id: id.to_string(),
        text: text.to_string(),
        token_span: (0, text.split_whitespace().count()),
        filing_ref: id.split(':').next().unwrap_or(id).to_string(),
        filed_at: "2024-03-01T00:00:00Z".parse().unwrap(),
    }
}

pub fn embedder() -> Arc<StubEmbedder> {
    Arc::new(StubEmbedder::new(ModelId::base("stub-embed"), 32))
}

pub fn retriever(chunks: &[Chunk], e: &dyn Embedder) -> Retriever {
    let r = Retriever::new(Bm25Params::default());
    r.index_add(chunks, e).unwrap();
    r
}

pub const VOCAB: &[&str] = &[
    "lithium", "supplier", "risk", "dividend", "debt", "covenant", "revenue", "margin", "fuel", "hedge", "aircraft",
    "lease", "pension", "tax", "audit", "merger", "goodwill", "impairment", "cash", "flow", "segment", "customer",
    "litigation", "patent", "inventory", "warranty", "credit", "facility", "interest", "rate", "currency", "swap",
    "labor", "union", "cyber", "breach", "climate", "emission", "capital", "expenditure",
];

pub fn random_text(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// `n` chunks of random vocabulary words.
pub fn random_corpus(seed: u64, n: usize) -> Vec<Chunk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| chunk(&format!("f{}:{i:05}", i % 7), &random_text(&mut rng, 5, 30))).collect()
}

/// Scripted generator: stub behaviour for answering and step-back,
/// fixed sub-question lists, and a judge driven by `judge(nth_call)`.
pub fn scripted<J>(judge: J) -> Arc<ScriptedGenerator>
where
    J: Fn(usize) -> String + Send + Sync + 'static,
{
    let stub = StubGenerator::new(ModelId::base("stub-gen"), 1 << 20);
    Arc::new(ScriptedGenerator::new(ModelId::base("scripted-gen"), move |req: &GenerationRequest, nth| match req.task {
        GenerationTask::Clarify => {
            Ok("1. Which company supplies lithium cells?\n2. What supplier risks are disclosed?\n3. Which company supplies lithium cells?\n4. Is there a backup supplier?\n5. What volumes are contracted?".into())
        }
        GenerationTask::Decompose => Ok("1. Who supplies lithium?\n2. What supply risk exists?".into()),
        GenerationTask::Judge => Ok(judge(nth)),
        _ => stub.generate(req).map(|r| r.text),
    }))
}

pub fn providers(g: Arc<dyn Generator>) -> ProviderSet {
    ProviderSet::single(embedder(), g)
}

/// Generator failing on the `n`-th call of `task` (0-based).
pub fn failing_on(task: GenerationTask, n: usize) -> Arc<ScriptedGenerator> {
    let stub = StubGenerator::new(ModelId::base("stub-gen"), 1 << 20);
    Arc::new(ScriptedGenerator::new(ModelId::base("failing-gen"), move |req: &GenerationRequest, nth| {
        if req.task == task && nth == n {
            return Err(ProviderError::Transport { endpoint: "test".into(), attempts: 3, message: "boom".into() });
        }
        stub.generate(req).map(|r| r.text)
    }))
}

pub fn supplier_corpus() -> Vec<Chunk> {
    vec![
        chunk("acc-1:00000", "Acme Corporation supplies lithium cells under a five year agreement."),
        chunk("acc-1:00001", "Revenue grew eight percent in the fiscal year."),
        chunk("acc-1:00002", "Acme Corporation headquarters relocated to Denver in March."),
        chunk("acc-1:00003", "Supply risk from a single lithium source is disclosed as material."),
        chunk("acc-1:00004", "The board declared a quarterly dividend."),
    ]
}
