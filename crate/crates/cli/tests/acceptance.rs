//! Acceptance suite. Each criterion prints one PASS/FAIL line to stderr
//! (bypassing the test harness capture) and fails its test on FAIL.
//!
//! Expected values come from naive oracles written here, independently of
//! the library code.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Duration as ChronoDuration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ragtrade::corpus::{chunk_filing, simulate_event_stream, Chunk, Cik, Filing, FormType};
use ragtrade::dataset::{aggregate_assessments, import_assessments};
use ragtrade::index::{Bm25Params, Retriever};
use ragtrade::metrics::{avg_rank, bleu, exact_match, hit_rate, mrr, ndcg, rouge1, EvalReport, RetrievalJudgment};
use ragtrade::pipeline::{default_matrix, Pipeline, PipelineConfig, PipelineEnv, RoundStage, SimulatedCosts, TimingMode};
use ragtrade::providers::{
    Embedder, GenerationRequest, GenerationTask, Generator, ModelId, ProviderSet, ScriptedGenerator, StubEmbedder,
    StubGenerator,
};
use ragtrade::tradespace::{frontier_report, min_time_to_target, pareto_frontier, ObjectiveQuery, ParetoPoint};
use ragtrade_cli::commands::demo::{self, DemoArgs};
use ragtrade_cli::commands::run::REPORTS_JSONL;

fn criterion(n: u32, title: &str, body: impl FnOnce() -> String) {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let secs = started.elapsed().as_secs_f64();
    let line = match &outcome {
        Ok(detail) => format!("ACCEPTANCE {n:>2} PASS  {title} ({detail}; {secs:.2}s)\n"),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            format!("ACCEPTANCE {n:>2} FAIL  {title}: {msg}\n")
        }
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(e) = outcome {
        std::panic::resume_unwind(e);
    }
}

// ---------- naive oracles ----------

fn oracle_terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn oracle_grade(j: &RetrievalJudgment, id: &str) -> f64 {
    match &j.relevance {
        Some(m) => *m.get(id).unwrap_or(&0.0),
        None => (id == j.gold_id) as u8 as f64,
    }
}

fn oracle_ndcg(j: &RetrievalJudgment, k: usize) -> f64 {
    let mut dcg = 0.0;
    for i in 0..k.min(j.ranked_ids.len()) {
        dcg += oracle_grade(j, &j.ranked_ids[i]) / (i as f64 + 2.0).log2();
    }
    let mut ideal: Vec<f64> = match &j.relevance {
        Some(m) => m.values().cloned().filter(|g| *g > 0.0).collect(),
        None => vec![1.0],
    };
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut idcg = 0.0;
    for (i, g) in ideal.iter().take(k).enumerate() {
        idcg += g / (i as f64 + 2.0).log2();
    }
    if idcg == 0.0 {
        0.0
    } else {
        (dcg / idcg).min(1.0)
    }
}

fn oracle_gold_rank(j: &RetrievalJudgment) -> Option<usize> {
    for (i, id) in j.ranked_ids.iter().enumerate() {
        if *id == j.gold_id {
            return Some(i + 1);
        }
    }
    None
}

fn oracle_mrr(js: &[RetrievalJudgment]) -> f64 {
    let mut s = 0.0;
    for j in js {
        for (i, id) in j.ranked_ids.iter().enumerate() {
            if oracle_grade(j, id) > 0.0 {
                s += 1.0 / (i + 1) as f64;
                break;
            }
        }
    }
    s / js.len() as f64
}

fn oracle_hit_rate(js: &[RetrievalJudgment], k: usize) -> f64 {
    js.iter().filter(|j| oracle_gold_rank(j).map_or(false, |r| r <= k)).count() as f64 / js.len() as f64
}

fn oracle_avg_rank(js: &[RetrievalJudgment]) -> Option<f64> {
    let ranks: Vec<f64> = js.iter().filter_map(oracle_gold_rank).map(|r| r as f64).collect();
    if ranks.is_empty() {
        None
    } else {
        Some(ranks.iter().sum::<f64>() / ranks.len() as f64)
    }
}

/// Clipped overlap by repeatedly removing matched items from a copy of the reference.
fn oracle_overlap<T: PartialEq + Clone>(cand: &[T], reference: &[T]) -> usize {
    let mut pool = reference.to_vec();
    let mut hits = 0;
    for c in cand {
        if let Some(pos) = pool.iter().position(|r| r == c) {
            pool.swap_remove(pos);
            hits += 1;
        }
    }
    hits
}

fn oracle_rouge1(cand: &str, reference: &str) -> (f64, f64, f64) {
    let (c, r) = (oracle_terms(cand), oracle_terms(reference));
    if c.is_empty() || r.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let o = oracle_overlap(&c, &r) as f64;
    let (p, rc) = (o / c.len() as f64, o / r.len() as f64);
    let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
    (p, rc, f)
}

fn oracle_bleu(cand: &str, reference: &str) -> f64 {
    let (c, r) = (oracle_terms(cand), oracle_terms(reference));
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let order = c.len().min(4);
    let mut product = 1.0;
    for n in 1..=order {
        let cg: Vec<Vec<String>> = c.windows(n).map(|w| w.to_vec()).collect();
        let rg: Vec<Vec<String>> = if r.len() >= n { r.windows(n).map(|w| w.to_vec()).collect() } else { Vec::new() };
        let m = oracle_overlap(&cg, &rg);
        if m == 0 {
            return 0.0;
        }
        product *= m as f64 / cg.len() as f64;
    }
    let geo = product.powf(1.0 / order as f64);
    let bp = if c.len() < r.len() { (1.0 - r.len() as f64 / c.len() as f64).exp() } else { 1.0 };
    geo * bp
}

fn oracle_exact(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.split_whitespace().map(|w| w.to_lowercase()).collect::<Vec<_>>().join(" ");
    norm(a) == norm(b)
}

fn cosine64(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

// ---------- fixtures ----------

const WORDS: &[&str] = &[
    "the", "a", "cat", "dog", "sat", "on", "mat", "Apple", "banana", "cherry", "lithium", "supplier", "risk", "debt",
    "notes", "2029", "fuel", "hedge", "Fuel.", "covenant", "revenue", "margin", "cash", "flow",
];

fn random_sentence(rng: &mut ChaCha8Rng, max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(if rng.gen_bool(0.2) { "  " } else { " " })
}

fn chunk(id: String, text: String) -> Chunk {
    Chunk {
        token_span: (0, text.split_whitespace().count()),
        filing_ref: id.split(':').next().unwrap().to_string(),
        chunk_id: id,
        text,
        filed_at: "2024-01-01T00:00:00Z".parse().unwrap(),
    }
}

fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<Chunk> {
    (0..n)
        .map(|i| {
            let mut text = random_sentence(rng, 25);
            if text.trim().is_empty() {
                text = "cash".into();
            }
            chunk(format!("doc{}:{i:05}", i % 11), text)
        })
        .collect()
}

fn report(id: &str, techniques: &[&str], hours: f64, quality: f64) -> EvalReport {
    EvalReport {
        config_id: id.into(),
        techniques: techniques.iter().map(|s| s.to_string()).collect(),
        alpha: 1.0,
        k: 5,
        n_questions: 10,
        ndcg: quality,
        hit_rate: quality,
        avg_rank: Some(1.0),
        found_fraction: 1.0,
        mrr: quality,
        rouge1_f: quality,
        rouge1_precision: quality,
        rouge1_recall: quality,
        bleu: quality,
        exact_match: 0.0,
        semantic_similarity: quality,
        non_answer_count: 0,
        failed_count: 0,
        measured_seconds: hours * 3600.0,
        prep_overhead_seconds: 0.0,
        total_seconds: hours * 3600.0,
        embedding_model: "e".into(),
        generation_model: "g".into(),
        similarity_model: "e".into(),
    }
}

// ---------- criteria ----------

#[test]
fn criterion_01_metric_oracle_equivalence() {
    criterion(1, "metric oracle equivalence (1000 cases each, tol 1e-9)", || {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tol = 1e-9;
        let ids: Vec<String> = (0..15).map(|i| format!("c{i}")).collect();
        for case in 0..1000 {
            let batch: Vec<RetrievalJudgment> = (0..rng.gen_range(1..6))
                .map(|q| {
                    let mut ranked = ids.clone();
                    ranked.shuffle(&mut rng);
                    ranked.truncate(rng.gen_range(0..=10));
                    let gold = ids.choose(&mut rng).unwrap().clone();
                    let mut j = RetrievalJudgment::binary(format!("q{q}"), ranked, gold);
                    if rng.gen_bool(0.3) {
                        let mut graded = HashMap::new();
                        for id in &ids {
                            if rng.gen_bool(0.3) {
                                graded.insert(id.clone(), rng.gen_range(0..4) as f64);
                            }
                        }
                        j.relevance = Some(graded);
                    }
                    j
                })
                .collect();
            let k = rng.gen_range(1..12);
            for j in &batch {
                let (got, want) = (ndcg(j, k).unwrap(), oracle_ndcg(j, k));
                assert!((got - want).abs() <= tol, "ndcg case {case}: {got} vs {want}");
            }
            let binary: Vec<RetrievalJudgment> =
                batch.iter().cloned().map(|mut j| { j.relevance = None; j }).collect();
            assert!((mrr(&batch).unwrap() - oracle_mrr(&batch)).abs() <= tol, "mrr case {case}");
            assert!((hit_rate(&binary, k).unwrap() - oracle_hit_rate(&binary, k)).abs() <= tol, "hit case {case}");
            match (avg_rank(&binary).unwrap(), oracle_avg_rank(&binary)) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= tol, "avg_rank case {case}"),
                (a, b) => assert_eq!(a, b, "avg_rank case {case}"),
            }

            let cand = random_sentence(&mut rng, 12);
            let reference = if rng.gen_bool(0.2) { cand.to_uppercase() } else { random_sentence(&mut rng, 12) };
            let r = rouge1(&cand, &reference);
            let (p, rc, f) = oracle_rouge1(&cand, &reference);
            assert!((r.precision - p).abs() <= tol && (r.recall - rc).abs() <= tol && (r.f1 - f).abs() <= tol, "rouge case {case}");
            let (got, want) = (bleu(&cand, &reference), oracle_bleu(&cand, &reference));
            assert!((got - want).abs() <= tol, "bleu case {case}: {cand:?} / {reference:?}: {got} vs {want}");
            assert_eq!(exact_match(&cand, &reference), oracle_exact(&cand, &reference), "exact case {case}");
        }
        let secs = started.elapsed().as_secs_f64();
        assert!(secs < 30.0, "took {secs:.1}s");
        "7 metrics agree with oracles".into()
    });
}

#[test]
fn criterion_02_pinned_values() {
    criterion(2, "pinned hand-computed values", || {
        let e = StubEmbedder::new(ModelId::base("e"), 8);
        let r = Retriever::new(Bm25Params { k1: 1.2, b: 0.75 });
        r.index_add(&[chunk("d1:0".into(), "apple banana".into()), chunk("d2:0".into(), "banana cherry".into())], &e).unwrap();
        let res = r.sparse_search("apple", 5).unwrap();
        assert_eq!(res.ids(), vec!["d1:0".to_string()]);
        assert!((res.ranked[0].score - 2f64.ln()).abs() < 1e-6, "bm25 {}", res.ranked[0].score);

        let j = RetrievalJudgment::binary("q", vec!["x".into(), "g".into()], "g");
        assert!((ndcg(&j, 2).unwrap() - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((ndcg(&j, 2).unwrap() - 0.6309).abs() < 5e-5);

        let ranked = |rank: usize| {
            let mut v: Vec<String> = (1..rank).map(|i| format!("x{i}")).collect();
            v.push("g".into());
            RetrievalJudgment::binary("q", v, "g")
        };
        let m = mrr(&[ranked(1), ranked(2), ranked(4)]).unwrap();
        assert!((m - 7.0 / 12.0).abs() < 1e-12);

        assert!((rouge1("apple banana", "apple cherry").f1 - 0.5).abs() < 1e-12);
        "bm25=ln2, ndcg=0.6309, mrr=7/12, rouge1=0.5".into()
    });
}

fn scripted_generator(judge: &'static str) -> Arc<ScriptedGenerator> {
    let stub = StubGenerator::new(ModelId::base("stub-gen"), 1 << 20);
    Arc::new(ScriptedGenerator::new(ModelId::base("scripted"), move |req: &GenerationRequest, _| match req.task {
        GenerationTask::Decompose => Ok("1. Who supplies lithium cells?\n2. What supplier risk is disclosed?".into()),
        GenerationTask::Judge => Ok(judge.into()),
        _ => stub.generate(req).map(|r| r.text),
    }))
}

#[test]
fn criterion_03_fixed_iteration_contract() {
    criterion(3, "FIR = 3 rounds and 3 generations; AIR hits the cap", || {
        let e: Arc<dyn Embedder> = Arc::new(StubEmbedder::new(ModelId::base("e"), 32));
        let corpus: Vec<Chunk> = [
            "Contoso relies on Harbor Cell Co. for lithium cells.",
            "Supplier concentration is a disclosed risk.",
            "Revenue grew 22 percent in the quarter.",
            "The company drew 150 million dollars under its term loan.",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| chunk(format!("f:{i:05}"), t.to_string()))
        .collect();
        let retriever = Retriever::new(Bm25Params::default());
        retriever.index_add(&corpus, e.as_ref()).unwrap();
        let env = PipelineEnv { timing: TimingMode::Simulated(SimulatedCosts::default()), ..Default::default() };
        let questions = ["Who supplies lithium cells?", "What risks are disclosed?", "How much was drawn?"];

        for q in questions {
            let g = scripted_generator("Yes");
            let set = ProviderSet::single(e.clone(), g.clone());
            let mut cfg = PipelineConfig::baseline("FIR", 1.0);
            cfg.fir = true;
            let resolved = set.resolve(false, false).unwrap();
            let t = Pipeline::new(&cfg, &retriever, &resolved, &env).unwrap().run_query(q).unwrap();
            assert_eq!(t.retrieval_rounds.len(), 3, "FIR rounds");
            assert_eq!(t.generation_calls.len(), 3, "FIR generations in trace");
            assert_eq!(g.calls(), 3, "FIR provider calls");
        }
        for cap in [1usize, 3, 5, 7] {
            let g = scripted_generator("No");
            let set = ProviderSet::single(e.clone(), g.clone());
            let mut cfg = PipelineConfig::baseline("AIR", 1.0);
            cfg.air = true;
            cfg.max_adaptive_iters = cap;
            let resolved = set.resolve(false, false).unwrap();
            let t = Pipeline::new(&cfg, &retriever, &resolved, &env).unwrap().run_query(questions[0]).unwrap();
            assert_eq!(t.sub_questions.len(), 2);
            for s in &t.sub_questions {
                assert_eq!(s.iterations, cap);
                assert!(!s.sufficient);
            }
            let adaptive = t.retrieval_rounds.iter().filter(|r| r.stage == RoundStage::Adaptive).count();
            assert_eq!(adaptive, 2 * cap);
            assert_eq!(g.calls_for(GenerationTask::Judge), 2 * cap);
        }
        "FIR 3/3 on 3 queries; AIR caps 1,3,5,7 exact".into()
    });
}

#[test]
fn criterion_04_hybrid_endpoints() {
    criterion(4, "hybrid endpoints on 100 queries x 200 chunks", || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = StubEmbedder::new(ModelId::base("e"), 32);
        let corpus = random_corpus(&mut rng, 200);
        let r = Retriever::new(Bm25Params::default());
        r.index_add(&corpus, &e).unwrap();
        let n = corpus.len();
        let mut mismatches = 0;
        for _ in 0..100 {
            let q = random_sentence(&mut rng, 5) + " risk";
            let k = rng.gen_range(1..=10);
            let dense_all = r.dense_search(&q, n, &e).unwrap();
            let sparse_all = r.sparse_search(&q, n).unwrap();
            let pool: BTreeSet<String> = dense_all
                .ranked
                .iter()
                .take(4 * k)
                .chain(sparse_all.ranked.iter().take(4 * k))
                .map(|x| x.chunk_id.clone())
                .collect();
            let dense_order: Vec<String> =
                dense_all.ids().into_iter().filter(|id| pool.contains(id)).take(k).collect();
            let sparse_score: HashMap<String, f64> =
                sparse_all.ranked.iter().map(|x| (x.chunk_id.clone(), x.score)).collect();
            let mut sparse_pool: Vec<&String> = pool.iter().collect();
            sparse_pool.sort_by(|a, b| {
                let (sa, sb) = (sparse_score.get(*a).unwrap_or(&0.0), sparse_score.get(*b).unwrap_or(&0.0));
                sb.total_cmp(sa).then_with(|| a.cmp(b))
            });
            let sparse_order: Vec<String> = sparse_pool.into_iter().take(k).cloned().collect();

            mismatches += (r.hybrid_search(&q, k, 1.0, &e).unwrap().ids() != dense_order) as usize;
            mismatches += (r.hybrid_search(&q, k, 0.0, &e).unwrap().ids() != sparse_order) as usize;
        }
        assert_eq!(mismatches, 0);
        "0 mismatches over 200 endpoint comparisons".into()
    });
}

#[test]
fn criterion_05_dense_oracle() {
    criterion(5, "flat dense ranking equals exhaustive cosine scan", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = StubEmbedder::new(ModelId::base("e"), 48);
        let mut checked = 0;
        for size in [1usize, 3, 10, 57, 250, 1000] {
            let corpus = random_corpus(&mut rng, size);
            let r = Retriever::new(Bm25Params::default());
            r.index_add(&corpus, &e).unwrap();
            let vectors = e.embed(&corpus.iter().map(|c| c.text.clone()).collect::<Vec<_>>()).unwrap();
            for _ in 0..10 {
                let q = random_sentence(&mut rng, 6) + " cash";
                let qv = &e.embed(&[q.clone()]).unwrap()[0];
                let mut scan: Vec<(String, f64)> = corpus
                    .iter()
                    .zip(&vectors)
                    .map(|(c, v)| (c.chunk_id.clone(), cosine64(&qv.values, &v.values)))
                    .collect();
                scan.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                let got = r.dense_search(&q, size, &e).unwrap();
                assert_eq!(got.ids(), scan.iter().map(|s| s.0.clone()).collect::<Vec<_>>(), "size {size} query {q:?}");
                for (item, (_, s)) in got.ranked.iter().zip(&scan) {
                    assert!((item.score - s).abs() < 1e-9);
                }
                checked += 1;
            }
        }
        format!("{checked} queries over corpora up to 1000 chunks")
    });
}

fn brute_force_frontier(points: &[ParetoPoint]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in points {
        let dominated = points.iter().any(|q| {
            q.time_hours <= p.time_hours
                && q.quality >= p.quality
                && (q.time_hours < p.time_hours || q.quality > p.quality)
        });
        let shadowed = points.iter().any(|q| {
            q.time_hours == p.time_hours && q.quality == p.quality && q.config_id < p.config_id
        });
        if !dominated && !shadowed {
            out.insert(p.config_id.clone());
        }
    }
    out
}

#[test]
fn criterion_06_pareto_correctness() {
    criterion(6, "Pareto frontier vs brute force; reference 7-point frontier", || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for set in 0..1000 {
            let points: Vec<ParetoPoint> = (0..30)
                .map(|i| {
                    // coarse grid so ties and duplicates occur
                    let t = rng.gen_range(1..=12) as f64 * 0.25;
                    let q = rng.gen_range(0..=20) as f64 / 20.0;
                    ParetoPoint::new(format!("C{i:02}"), t, q)
                })
                .collect();
            let got: BTreeSet<String> = pareto_frontier(&points).unwrap().into_iter().map(|p| p.config_id).collect();
            assert_eq!(got, brute_force_frontier(&points), "set {set}");
        }

        // Reference set over the full 30-config matrix: seven configs on
        // the boundary, every other config behind one of them.
        let matrix = default_matrix();
        let find = |techs: &[&str], alpha: f64| {
            matrix
                .iter()
                .find(|c| c.techniques() == techs && c.alpha == alpha)
                .unwrap_or_else(|| panic!("no config {techs:?} alpha {alpha}"))
                .config_id
                .clone()
        };
        let boundary = [
            (find(&[], 1.0), 0.40, 0.30),
            (find(&["UA"], 1.0), 0.55, 0.33),
            (find(&["FIR"], 1.0), 0.80, 0.36),
            (find(&["FTR"], 1.0), 1.10, 0.50),
            (find(&["FTR", "UA"], 1.0), 1.40, 0.53),
            (find(&["FTR", "FIR"], 1.0), 2.00, 0.57),
            (find(&["FTR", "AIR"], 1.0), 3.00, 0.62),
        ];
        let mut reports = Vec::new();
        let mut behind = 0;
        for c in &matrix {
            let techs = c.techniques();
            if let Some((id, h, q)) = boundary.iter().find(|b| b.0 == c.config_id) {
                reports.push(report(id, &techs, *h, *q));
            } else {
                let (_, h, q) = &boundary[behind % boundary.len()];
                behind += 1;
                reports.push(report(&c.config_id, &techs, h + 0.05 * behind as f64, q - 0.01 - 0.001 * behind as f64));
            }
        }
        let fr = frontier_report(&reports, "rouge1_f").unwrap();
        let front: Vec<&str> = fr.frontier().iter().map(|r| r.config_id.as_str()).collect();
        assert_eq!(front.len(), 7, "{front:?}");
        let oracle = brute_force_frontier(
            &reports.iter().map(|r| ParetoPoint::new(&r.config_id, r.time_hours(), r.rouge1_f)).collect::<Vec<_>>(),
        );
        assert_eq!(front.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(), oracle);
        let tag = |id: &str| fr.rows.iter().find(|r| r.config_id == id).unwrap().exemplar_tag.clone();
        assert_eq!(tag(&boundary[6].0), "best_quality");
        assert_eq!(tag(&boundary[0].0), "fastest");
        format!("1000 random sets exact; reference set: 7 points, best {} fastest {}", boundary[6].0, boundary[0].0)
    });
}

#[test]
fn criterion_07_objective() {
    criterion(7, "min_time_to_target oracle and monotonicity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let random_reports = |rng: &mut ChaCha8Rng| -> Vec<EvalReport> {
            (0..rng.gen_range(1..30))
                .map(|i| report(&format!("C{i:02}"), &[], rng.gen_range(1..40) as f64 * 0.1, rng.gen_range(0..=50) as f64 / 50.0))
                .collect()
        };
        for _ in 0..500 {
            let reports = random_reports(&mut rng);
            let target = rng.gen_range(0.0..1.05);
            let q = ObjectiveQuery { metric_name: "rouge1_f".into(), m_target: target, t_event: None };
            let got = min_time_to_target(&reports, &q, &[]).unwrap();
            let want = reports
                .iter()
                .filter(|r| r.rouge1_f >= target)
                .min_by(|a, b| a.total_seconds.total_cmp(&b.total_seconds).then_with(|| a.config_id.cmp(&b.config_id)));
            match (got, want) {
                (Some(g), Some(w)) => {
                    assert_eq!(g.config_id, w.config_id);
                    assert_eq!(g.tau_seconds, w.total_seconds);
                }
                (None, None) => {}
                (g, w) => panic!("objective {g:?} vs oracle {:?}", w.map(|r| &r.config_id)),
            }
        }
        for _ in 0..100 {
            let reports = random_reports(&mut rng);
            let mut last = f64::NEG_INFINITY;
            let mut infeasible = false;
            for step in 0..=42 {
                let q = ObjectiveQuery { metric_name: "rouge1_f".into(), m_target: step as f64 / 40.0, t_event: None };
                match min_time_to_target(&reports, &q, &[]).unwrap() {
                    Some(o) => {
                        assert!(!infeasible, "feasible again after infeasible");
                        assert!(o.tau_seconds >= last);
                        last = o.tau_seconds;
                    }
                    None => infeasible = true,
                }
            }
        }
        "500 oracle checks, 100 monotone sweeps".into()
    });
}

#[test]
fn criterion_08_end_to_end_determinism() {
    criterion(8, "demo eval_reports.jsonl byte-identical (3 runs, 1 vs 4 workers)", || {
        let started = Instant::now();
        let mut outputs = Vec::new();
        for workers in [1usize, 1, 1, 4] {
            let dir = tempfile::tempdir().unwrap();
            demo::execute(&DemoArgs { out: dir.path().to_path_buf(), workers, metric: "ndcg".into(), target: 0.85 }).unwrap();
            outputs.push(std::fs::read(dir.path().join("runs/demo").join(REPORTS_JSONL)).unwrap());
        }
        assert!(outputs.iter().all(|o| o == &outputs[0]), "outputs differ");
        let secs = started.elapsed().as_secs_f64();
        assert!(secs < 60.0, "took {secs:.1}s");
        format!("{} bytes identical across 4 runs", outputs[0].len())
    });
}

#[test]
fn criterion_09_ingest_latency_and_chunking() {
    criterion(9, "ingest latency invariant; chunk reconstruction on 500 documents", || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t0: DateTime<Utc> = "2024-01-01T00:00:00Z".parse().unwrap();
        let filing = |i: usize, text: String| Filing {
            accession_id: format!("0000000001-24-{i:06}"),
            cik: Cik(1),
            company: "Acme".into(),
            form_type: FormType::EightK,
            filed_at: t0,
            raw_text: text,
            source_url: String::new(),
        };
        let filings: Vec<Filing> = (0..200).map(|i| filing(i, "text".into())).collect();
        // bursts of simultaneous events force queueing
        let schedule: HashMap<String, DateTime<Utc>> = filings
            .iter()
            .map(|f| (f.accession_id.clone(), t0 + ChronoDuration::milliseconds(rng.gen_range(0..50))))
            .collect();
        let events = simulate_event_stream(&filings, &schedule, |_| {
            std::hint::black_box((0..2000).sum::<u64>());
            Ok(())
        })
        .unwrap();
        assert_eq!(events.len(), filings.len());
        for e in &events {
            assert!(e.ingested_time >= e.event_time, "{}", e.filing_ref);
            let expect = (e.ingested_time - e.event_time).num_nanoseconds().unwrap() as f64 / 1e9;
            assert!((e.latency_seconds - expect).abs() < 1e-6 && e.latency_seconds >= 0.0);
        }

        for doc in 0..500 {
            let n_tokens = rng.gen_range(0..400);
            let text = (0..n_tokens).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
            let size = rng.gen_range(1..80);
            let overlap = rng.gen_range(0..size);
            let chunks = chunk_filing(&filing(doc, text.clone()), size, overlap).unwrap();
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let mut rebuilt: Vec<&str> = Vec::new();
            for c in &chunks {
                let (s, e) = c.token_span;
                assert_eq!(c.text.split_whitespace().collect::<Vec<_>>(), tokens[s..e].to_vec());
                assert!(e - s <= size && s <= rebuilt.len());
                rebuilt.extend(&tokens[rebuilt.len()..e]);
            }
            assert_eq!(rebuilt, tokens, "doc {doc} size {size} overlap {overlap}");
        }
        "200 events ordered and non-negative; 500 documents rebuilt exactly".into()
    });
}

#[test]
fn criterion_10_assessment_aggregation() {
    criterion(10, "210 assessments with 164 correct give 78.1%", || {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("assessments.csv");
        let mut csv = String::from("question_id,config_id,assessor_id,correct,better_than_human,complex,important\n");
        for i in 0..210 {
            let correct = (i * 37 % 210) < 164;
            csv.push_str(&format!("q{i:03},C1,sme-{},{},0,{},{}\n", i % 3, correct as u8, (i % 4 == 0) as u8, (i % 5 == 0) as u8));
        }
        std::fs::write(&path, csv).unwrap();
        let import = import_assessments(&path, None, None).unwrap();
        assert!(import.errors.is_empty(), "{:?}", import.errors);
        assert_eq!(import.rows.len(), 210);
        let summary = aggregate_assessments(&import.rows);
        assert_eq!(summary.len(), 1);
        let pct = summary[0].correct_rate * 100.0;
        assert!((pct - 78.1).abs() <= 0.1, "{pct}");
        format!("{pct:.2}% correct")
    });
}
