use ragtrade::dataset::{Provenance, QATriplet};
use ragtrade::metrics::*;
use ragtrade::pipeline::QueryTrace;
use ragtrade::providers::{cosine, Embedder, ModelId, StubEmbedder};

fn triplet(id: &str, q: &str, answer: &str, gold: &str) -> QATriplet {
    QATriplet {
        id: id.into(),
        question: q.into(),
        gold_passage: "passage".into(),
        gold_chunk_ref: Some(gold.into()),
        answer: answer.into(),
        provenance: Provenance::Human,
        tags: Default::default(),
    }
}

fn trace(q: &str, answer: &str, ranked: &[&str], total: f64) -> QueryTrace {
    let mut t = QueryTrace::new("C1", q);
    t.final_answer = answer.into();
    t.non_answer = detect_non_answer(answer);
    t.final_context_ids = ranked.iter().map(|s| s.to_string()).collect();
    t.timings.total = total;
    t
}

fn ctx<'a>(e: &'a StubEmbedder, d: &'a NonAnswerDetector) -> ScoreContext<'a> {
    ScoreContext {
        config_id: "C1",
        techniques: vec!["AIR".into()],
        alpha: 1.0,
        k: 5,
        embedding_model: "e",
        generation_model: "g",
        prep_overhead_seconds: 10.0,
        similarity: e,
        detector: d,
    }
}

fn score(traces: &[QueryTrace], triplets: &[QATriplet]) -> EvalReport {
    let e = StubEmbedder::new(ModelId::base("stub-embed"), 64);
    let d = NonAnswerDetector::default();
    let j = judgments_from_traces(traces, triplets, &|_| None);
    score_run(traces, triplets, &j, &ctx(&e, &d)).unwrap()
}

#[test]
fn perfect_run() {
    let qs = [triplet("a", "q1", "Acme supplies lithium", "g1"), triplet("b", "q2", "Dividend declared", "g2")];
    let ts = [trace("q1", "Acme supplies lithium", &["g1", "x"], 1.0), trace("q2", "Dividend declared", &["g2"], 1.0)];
    let r = score(&ts, &qs);
    for m in ["ndcg", "hit_rate", "mrr", "rouge1_f", "bleu", "exact_match", "found_fraction"] {
        assert_eq!(r.metric(m), Some(1.0), "{m}");
    }
    assert!((r.semantic_similarity - 1.0).abs() < 1e-6);
    assert_eq!(r.avg_rank, Some(1.0));
    assert_eq!(r.non_answer_count, 0);
}

#[test]
fn empty_candidates() {
    let qs = [triplet("a", "q1", "Acme", "g1"), triplet("b", "q2", "Dividend", "g2")];
    let ts = [trace("q1", "", &[], 1.0), trace("q2", "  ", &[], 1.0)];
    let r = score(&ts, &qs);
    assert_eq!(r.exact_match, 0.0);
    assert_eq!(r.non_answer_count, 2);
    assert_eq!(r.rouge1_f, 0.0);
    assert_eq!(r.semantic_similarity, 0.0);
    assert_eq!(r.avg_rank, None);
    assert_eq!(r.hit_rate, 0.0);
}

#[test]
fn two_question_fixture_by_hand() {
    let qs = [triplet("a", "q1", "Acme supplies lithium", "g1"), triplet("b", "q2", "apple cherry", "g2")];
    let ts = [
        trace("q1", "Acme supplies lithium", &["g1", "x"], 1.5),
        trace("q2", "apple banana", &["x", "y", "g2"], 2.5),
    ];
    let r = score(&ts, &qs);
    // rouge: 1 and 0.5
    assert!((r.rouge1_f - 0.75).abs() < 1e-12);
    // bleu: 1 and 0 (bigram precision 0)
    assert!((r.bleu - 0.5).abs() < 1e-12);
    assert_eq!(r.exact_match, 0.5);
    // ndcg: 1 and 1/log2(4)
    assert!((r.ndcg - 0.75).abs() < 1e-12);
    assert!((r.mrr - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
    assert_eq!(r.avg_rank, Some(2.0));
    assert_eq!(r.hit_rate, 1.0);
    let e = StubEmbedder::new(ModelId::base("stub-embed"), 64);
    let v = e.embed(&["apple banana".into(), "apple cherry".into()]).unwrap();
    let expect = (1.0 + cosine(&v[0], &v[1]).max(0.0)) / 2.0;
    assert!((r.semantic_similarity - expect).abs() < 1e-6);
    assert_eq!((r.measured_seconds, r.total_seconds), (4.0, 14.0));
    assert_eq!(r.metric("nope"), None);
}

#[test]
fn misaligned_inputs_rejected() {
    let e = StubEmbedder::new(ModelId::base("stub-embed"), 64);
    let d = NonAnswerDetector::default();
    let qs = [triplet("a", "q1", "x", "g"), triplet("b", "q2", "y", "g")];
    let ts = [trace("q1", "x", &["g"], 1.0)];
    let j = judgments_from_traces(&ts, &qs, &|_| None);
    assert!(matches!(score_run(&ts, &qs, &j, &ctx(&e, &d)), Err(MetricsError::InvalidArgument(_))));
    let swapped = [trace("q2", "x", &["g"], 1.0), trace("q1", "y", &["g"], 1.0)];
    let j = judgments_from_traces(&swapped, &qs, &|_| None);
    assert!(score_run(&swapped, &qs, &j, &ctx(&e, &d)).is_err());
}

#[test]
fn jsonl_and_csv_exports() {
    let qs = [triplet("a", "q1", "Acme", "g1")];
    let ts = [trace("q1", "", &[], 1.0)];
    let r = score(&ts, &qs);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.jsonl");
    write_reports_jsonl(&p, &[r.clone(), r.clone()]).unwrap();
    assert_eq!(read_reports_jsonl(&p).unwrap(), vec![r.clone(), r.clone()]);
    assert!(std::fs::read_to_string(&p).unwrap().contains("\"avg_rank\":null"));
    let c = dir.path().join("r.csv");
    write_reports_csv(&c, &[r]).unwrap();
    let text = std::fs::read_to_string(&c).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("config_id,techniques,alpha"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "AIR");
    assert_eq!(row[7], "");
}
