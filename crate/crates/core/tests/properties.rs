use proptest::prelude::*;
use ragtrade::corpus::{chunk_filing, Cik, Filing, FormType};
use ragtrade::metrics::{ndcg, rouge1, RetrievalJudgment};
use ragtrade::tradespace::{pareto_frontier, ParetoPoint};

fn arb_points() -> impl Strategy<Value = Vec<ParetoPoint>> {
    prop::collection::vec((1u32..10, 0u32..10), 1..30).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (t, q))| ParetoPoint::new(format!("C{i:02}"), t as f64 * 0.5, q as f64 / 10.0))
            .collect()
    })
}

fn ids(points: &[ParetoPoint]) -> Vec<String> {
    let mut v: Vec<String> = points.iter().map(|p| p.config_id.clone()).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frontier_members_are_mutually_non_dominated(points in arb_points()) {
        let front = pareto_frontier(&points).unwrap();
        prop_assert!(!front.is_empty());
        for a in &front {
            for b in &front {
                if a.config_id != b.config_id {
                    let dominates = b.time_hours <= a.time_hours && b.quality >= a.quality;
                    prop_assert!(!dominates, "{} dominated by {}", a.config_id, b.config_id);
                }
            }
        }
        for w in front.windows(2) {
            prop_assert!(w[0].time_hours < w[1].time_hours && w[0].quality < w[1].quality);
        }
    }

    #[test]
    fn dominated_addition_leaves_frontier_unchanged(points in arb_points(), pick in any::<prop::sample::Index>(), dt in 0.0f64..3.0, dq in 0.0f64..0.5) {
        let base = pareto_frontier(&points).unwrap();
        let anchor = &points[pick.index(points.len())];
        let mut more = points.clone();
        more.push(ParetoPoint::new("Z99", anchor.time_hours + dt, anchor.quality - dq));
        prop_assert_eq!(ids(&pareto_frontier(&more).unwrap()), ids(&base));
    }

    #[test]
    fn ndcg_is_bounded(ranked in prop::collection::vec(0u8..20, 0..15), gold in 0u8..20, k in 1usize..20) {
        let mut seen = std::collections::HashSet::new();
        let ranked: Vec<String> = ranked.into_iter().filter(|x| seen.insert(*x)).map(|x| format!("c{x}")).collect();
        let j = RetrievalJudgment::binary("q", ranked, format!("c{gold}"));
        let v = ndcg(&j, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn rouge1_f_is_symmetric(a in "[a-d ]{0,30}", b in "[a-d ]{0,30}") {
        prop_assert!((rouge1(&a, &b).f1 - rouge1(&b, &a).f1).abs() < 1e-12);
    }

    #[test]
    fn chunks_cover_the_document(words in prop::collection::vec("[a-z]{1,6}", 0..200), size in 1usize..40, overlap_frac in 0.0f64..1.0) {
        let overlap = ((size as f64) * overlap_frac) as usize;
        let text = words.join(" ");
        let filing = Filing {
            accession_id: "0000000001-24-000001".into(),
            cik: Cik(1),
            company: "Acme".into(),
            form_type: FormType::TenK,
            filed_at: "2024-01-01T00:00:00Z".parse().unwrap(),
            raw_text: text,
            source_url: String::new(),
        };
        let chunks = chunk_filing(&filing, size, overlap.min(size - 1)).unwrap();
        let mut covered = 0;
        for c in &chunks {
            let (s, e) = c.token_span;
            prop_assert!(s <= covered && e > covered && e - s <= size);
            prop_assert_eq!(c.text.split_whitespace().collect::<Vec<_>>(), words[s..e].iter().map(String::as_str).collect::<Vec<_>>());
            covered = e;
        }
        prop_assert_eq!(covered, words.len());
    }
}
