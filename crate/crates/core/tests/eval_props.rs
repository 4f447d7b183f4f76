use std::collections::HashMap;

use mirrormatch::corpus::Relevance;
use mirrormatch::eval::{average_precision, precision_at_k, recall_at_k, wss100, MetricsReport};
use mirrormatch::ranking::RankedList;
use proptest::prelude::*;

fn setup(scores: &[f64], rel: &[bool]) -> (RankedList, HashMap<String, Relevance>) {
    let ids: Vec<String> = (0..scores.len()).map(|i| format!("d{i:03}")).collect();
    let list = RankedList::from_scores("q", ids.iter().cloned().zip(scores.iter().copied()).collect());
    let qrels = ids
        .into_iter()
        .zip(rel)
        .map(|(id, &r)| (id, if r { Relevance::Relevant } else { Relevance::NonRelevant }))
        .collect();
    (list, qrels)
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(any::<bool>(), n).prop_map(|mut v| {
                v[0] = true;
                v
            }),
        )
    })
}

proptest! {
    #[test]
    fn metrics_lie_in_unit_interval((scores, rel) in instance()) {
        let (l, q) = setup(&scores, &rel);
        let m = MetricsReport::compute(&l, &q, &[1, 5, 10, 20, 30]).unwrap();
        for v in [m.ap, m.wss100].into_iter().chain(m.pr_at.values().copied()).chain(m.re_at.values().copied()) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn ap_depends_only_on_order((scores, rel) in instance()) {
        let (l, q) = setup(&scores, &rel);
        let transformed: Vec<f64> = scores.iter().map(|s| (s * 0.5).exp() + 3.0).collect();
        let (l2, _) = setup(&transformed, &rel);
        prop_assert_eq!(l.doc_ids().collect::<Vec<_>>(), l2.doc_ids().collect::<Vec<_>>());
        prop_assert_eq!(average_precision(&l, &q).unwrap(), average_precision(&l2, &q).unwrap());
    }

    #[test]
    fn recall_grows_with_k((scores, rel) in instance()) {
        let (l, q) = setup(&scores, &rel);
        let mut prev = 0.0;
        for k in 1..=l.len() + 2 {
            let r = recall_at_k(&l, &q, k).unwrap();
            prop_assert!(r >= prev);
            prev = r;
        }
        prop_assert_eq!(prev, 1.0);
    }

    #[test]
    fn precision_and_recall_agree_at_full_depth((scores, rel) in instance()) {
        let (l, q) = setup(&scores, &rel);
        let n = l.len();
        let total = rel.iter().filter(|&&r| r).count() as f64;
        let lhs = precision_at_k(&l, &q, n).unwrap() * n as f64;
        let rhs = recall_at_k(&l, &q, n).unwrap() * total;
        prop_assert!((lhs - rhs).abs() < 1e-9);
        prop_assert!(wss100(&l, &q).unwrap() < 1.0);
    }
}
