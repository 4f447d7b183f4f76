//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs under `cargo test` (no libtest harness).

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use indexmap::IndexMap;
use mirrormatch::baselines::{
    bm25_score, ok_sim, ql_jm_score, tf_inner, tfidf_cosine, wmd_distance, Bm25Params, CollectionStats, JmSmoothing,
};
use mirrormatch::corpus::{Relevance, TermSequence};
use mirrormatch::embeddings::{train_sgns_with_report, EmbeddingParams};
use mirrormatch::eval::{average_precision, precision_at_k, recall_at_k, wss100};
use mirrormatch::mmatch::{mirror_match, one_way_score, MatchParams};
use mirrormatch::ranking::{ModelKind, ModelSpec, PreparedDoc, RankedList, ScoreError, Scorer, TopicIndex};
use mirrormatch::screening::{fuse_rankings, simulate_rounds, two_way_pair_analysis};
use rand::seq::SliceRandom;
use rand::Rng;
use support::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lambda_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

fn identity() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let emb = random_table(&mut r, 200, 50);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let q = random_seq(&mut r, &format!("q{i}"), 200, 1..=200);
        let s = mirror_match(&q, &q, &MatchParams::default(), &emb).map_err(|e| e.to_string())?;
        worst = worst.max((s.total - 2.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-9, || format!("max |M(Q,Q) - 2| = {worst:e}"))?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max |M(Q,Q) - 2| = {worst:.1e}, {secs:.3} s for 100 documents"))
}

fn symmetry() -> Outcome {
    let mut r = rng(102);
    let emb = random_table(&mut r, 40, 16);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let q = random_seq(&mut r, "q", 40, 1..=60);
        let d = random_seq(&mut r, "d", 40, 1..=60);
        let p = MatchParams::new(r.gen_range(0.05..=1.0), r.gen_bool(0.8), true).unwrap();
        let a = mirror_match(&q, &d, &p, &emb).unwrap().total;
        let b = mirror_match(&d, &q, &p, &emb).unwrap().total;
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-12, || format!("max |M(Q,D) - M(D,Q)| = {worst:e}"))?;
    Ok(format!("max |M(Q,D) - M(D,Q)| = {worst:.1e} over 200 pairs"))
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(103);
    let emb = random_table(&mut r, 40, 16);
    let grid = lambda_grid();
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let q = random_seq(&mut r, "q", 40, 1..=50);
        let d = random_seq(&mut r, "d", 40, 1..=50);
        let lambda = grid[case % grid.len()];
        let p = MatchParams::with_lambda(lambda).unwrap();
        let got = mirror_match(&q, &d, &p, &emb).unwrap().total;
        let want = naive_mirror_match(&q, &d, lambda, true, &emb);
        worst = worst.max((got - want).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation from nested-loop reference {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e} over 500 pairs, lambda 0.05..1.0"))
}

fn variant_collapse() -> Outcome {
    let mut r = rng(104);
    let emb = random_table(&mut r, 40, 16);
    for case in 0..200 {
        let q = random_seq(&mut r, "q", 40, 1..=50);
        let d = random_seq(&mut r, "d", 40, 1..=50);
        let wide = mirror_match(&q, &d, &MatchParams::with_lambda(1.0).unwrap(), &emb).unwrap();
        let flat = mirror_match(&q, &d, &MatchParams::new(0.35, false, true).unwrap(), &emb).unwrap();
        ensure(wide == flat, || format!("case {case}: {wide:?} vs {flat:?}"))?;
    }
    Ok("lambda = 1 equals the position-free variant bit for bit on 200 pairs".into())
}

fn monotonicity() -> Outcome {
    let mut r = rng(105);
    let emb = random_table(&mut r, 40, 16);
    let mut evaluations = 0;
    for case in 0..100 {
        let q = random_seq(&mut r, "q", 40, 1..=50);
        let d = random_seq(&mut r, "d", 40, 1..=50);
        for (src, tgt) in [(&q, &d), (&d, &q)] {
            let mut prev = f64::NEG_INFINITY;
            for lambda in lambda_grid() {
                let s = one_way_score(src, tgt, &MatchParams::with_lambda(lambda).unwrap(), &emb).unwrap();
                ensure(s >= prev, || format!("case {case}: {s} < {prev} at lambda {lambda}"))?;
                prev = s;
                evaluations += 1;
            }
        }
    }
    Ok(format!("one-way scores non-decreasing across the sweep ({evaluations} evaluations)"))
}

fn list(ids: &[&str]) -> RankedList {
    RankedList::from_ordered("q", ids.iter().map(|d| (d.to_string(), 0.0)).collect())
}

fn judgments(relevant: &[&str], all: &[&str]) -> HashMap<String, Relevance> {
    all.iter()
        .map(|d| {
            let r = if relevant.contains(d) { Relevance::Relevant } else { Relevance::NonRelevant };
            (d.to_string(), r)
        })
        .collect()
}

fn metric_fixtures() -> Outcome {
    let ids = ["r1", "n1", "r2"];
    let (l, q) = (list(&ids), judgments(&["r1", "r2"], &ids));
    let ap = average_precision(&l, &q).map_err(|e| e.to_string())?;
    let (p2, r2) = (precision_at_k(&l, &q, 2).unwrap(), recall_at_k(&l, &q, 2).unwrap());
    let ten: Vec<String> = (1..=10).map(|i| format!("d{i:02}")).collect();
    let ten: Vec<&str> = ten.iter().map(String::as_str).collect();
    let wss = wss100(&list(&ten), &judgments(&["d01", "d04"], &ten)).unwrap();
    ensure((ap - 5.0 / 6.0).abs() <= 1e-9, || format!("AP([R,N,R]) = {ap}"))?;
    ensure((wss - 0.6).abs() <= 1e-12, || format!("WSS100 = {wss}"))?;
    ensure(p2 == 0.5 && r2 == 0.5, || format!("Pr@2 = {p2}, Re@2 = {r2}"))?;
    Ok(format!("AP = {ap:.4}, WSS100 = {wss}, Pr@2 = {p2}, Re@2 = {r2}"))
}

fn wmd_checks() -> Outcome {
    let mut r = rng(107);
    let emb = random_table(&mut r, 60, 10);
    let (mut self_worst, mut sym_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let a = random_seq(&mut r, "a", 60, 1..=40);
        let b = random_seq(&mut r, "b", 60, 1..=40);
        self_worst = self_worst.max(wmd_distance(&a, &a, &emb).unwrap().abs());
        let (ab, ba) = (wmd_distance(&a, &b, &emb).unwrap(), wmd_distance(&b, &a, &emb).unwrap());
        sym_worst = sym_worst.max((ab - ba).abs());
    }
    let small = random_table(&mut r, 5, 6);
    let mut lp_worst: f64 = 0.0;
    for _ in 0..50 {
        let a = random_seq(&mut r, "a", 5, 1..=8);
        let b = random_seq(&mut r, "b", 5, 1..=8);
        lp_worst = lp_worst.max((wmd_distance(&a, &b, &small).unwrap() - wmd_lp(&a, &b, &small)).abs());
    }
    ensure(self_worst <= 1e-10, || format!("max wmd(d,d) = {self_worst:e}"))?;
    ensure(sym_worst <= 1e-10, || format!("max asymmetry {sym_worst:e}"))?;
    ensure(lp_worst <= 1e-8, || format!("max deviation from LP oracle {lp_worst:e}"))?;
    Ok(format!(
        "wmd(d,d) <= {self_worst:.1e}, asymmetry <= {sym_worst:.1e}, LP deviation <= {lp_worst:.1e}"
    ))
}

fn baseline_oracles() -> Outcome {
    let mut r = rng(108);
    let names = ["bm25", "ql", "tfidf", "tfinner", "ok"];
    let mut worst = [0.0f64; 5];
    for _ in 0..200 {
        let n = r.gen_range(2..=12);
        let docs: Vec<TermSequence> = (0..n).map(|i| random_seq(&mut r, &format!("d{i}"), 30, 1..=40)).collect();
        let stats = CollectionStats::build(&docs).unwrap();
        let raw = RawCollection::new(&docs);
        let (q, d) = (&docs[r.gen_range(0..n)], &docs[r.gen_range(0..n)]);
        let p = Bm25Params {
            k1: r.gen_range(0.5..2.5),
            b: r.gen_range(0.0..1.0),
        };
        let sm = JmSmoothing {
            lambda: r.gen_range(0.05..0.95),
            ..JmSmoothing::default()
        };
        let pairs = [
            (bm25_score(q, d, &stats, &p), raw.bm25(q, d, p.k1, p.b)),
            (ql_jm_score(q, d, &stats, &sm).unwrap(), raw.ql(q, d, sm.lambda)),
            (tfidf_cosine(q, d, &stats), raw.tfidf(q, d)),
            (tf_inner(q, d), support::tf_inner(q, d)),
            (ok_sim(q, d, &stats, &p), raw.ok(q, d, p.k1, p.b)),
        ];
        for (w, (got, want)) in worst.iter_mut().zip(pairs) {
            *w = w.max((got - want).abs());
        }
    }
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(worst.iter().all(|&w| w <= 1e-12), || format!("max absolute error: {detail}"))?;
    Ok(format!("max absolute error over 200 instances: {detail}"))
}

fn sgns_sanity() -> Outcome {
    let mut lowest: f64 = 1.0;
    for seed in 0..20u64 {
        let corpus = two_cluster_corpus(&mut rng(1000 + seed), 1000, 10);
        let params = EmbeddingParams::with_seed(seed);
        let (emb, report) = train_sgns_with_report(&corpus, &params).map_err(|e| e.to_string())?;
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for t in corpus.iter().flat_map(|s| &s.terms) {
            *freq.entry(t).or_default() += 1;
        }
        let mut want: Vec<&str> = freq.iter().filter(|(_, &c)| c >= 5).map(|(w, _)| *w).collect();
        let mut got: Vec<&str> = emb.words().iter().map(String::as_str).collect();
        want.sort_unstable();
        got.sort_unstable();
        ensure(got == want, || format!("seed {seed}: vocabulary differs from tokens with frequency >= 5"))?;
        let (first, last) = (report.epoch_losses[0], *report.epoch_losses.last().unwrap());
        ensure(last < first, || format!("seed {seed}: loss {first} -> {last}"))?;
        let rate = cluster_triple_rate(&emb, &mut rng(seed), 10, 1000);
        ensure(rate >= 0.95, || format!("seed {seed}: within-cluster rate {rate:.3}"))?;
        lowest = lowest.min(rate);
    }
    Ok(format!("20 seeds, default parameters: lowest within-cluster rate {lowest:.3}, loss falls in every run"))
}

fn fusion_fixtures() -> Outcome {
    let mut r = rng(110);
    for _ in 0..100 {
        let n = r.gen_range(1..20);
        let mut ids: Vec<String> = (0..n).map(|i| format!("d{i:02}")).collect();
        ids.shuffle(&mut r);
        let l = RankedList::from_ordered("s", ids.iter().map(|d| (d.clone(), 0.0)).collect());
        let fused = fuse_rankings(&vec![l.clone(); r.gen_range(1..6)]).unwrap();
        ensure(fused.doc_ids().eq(l.doc_ids()), || "fusing copies changed the order".into())?;
    }
    let fwd = list(&["c", "a", "b"]);
    let rev = list(&["b", "a", "c"]);
    let fused = fuse_rankings(&[fwd, rev]).unwrap();
    let order: Vec<&str> = fused.doc_ids().collect();
    ensure(order == ["a", "b", "c"], || format!("list + reverse gave {order:?}"))?;
    for case in 0..100 {
        let n = r.gen_range(1..15);
        let ids: Vec<String> = (0..n).map(|i| format!("d{i:02}")).collect();
        let mut lists: Vec<RankedList> = (0..r.gen_range(1..6))
            .map(|j| {
                let mut ids = ids.clone();
                ids.shuffle(&mut r);
                RankedList::from_ordered(format!("s{j}"), ids.into_iter().map(|d| (d, 0.0)).collect())
            })
            .collect();
        let a = fuse_rankings(&lists).unwrap();
        lists.shuffle(&mut r);
        let b = fuse_rankings(&lists).unwrap();
        ensure(a.entries == b.entries, || format!("case {case}: order of inputs changed the fusion"))?;
    }
    Ok("copies are the identity, list + reverse gives doc_id order, 100 permutations invariant".into())
}

/// Directed scores from a fixed table.
struct Table(HashMap<(String, String), f64>);

impl Scorer for Table {
    fn score(&self, q: &PreparedDoc, d: &PreparedDoc) -> Result<f64, ScoreError> {
        self.0
            .get(&(q.doc_id().to_string(), d.doc_id().to_string()))
            .copied()
            .ok_or_else(|| ScoreError::Other(format!("{} -> {}", q.doc_id(), d.doc_id())))
    }
}

fn simulation_fixture() -> Outcome {
    // a, b, c relevant. Initial rankings: a -> [b d c e f], b -> [d a e f c],
    // c -> [e f a b d]. With batch 2, round 1 leaves {c e f} fused from two
    // seeds for a and b ([e c f], AP 1/2) and [a b d] for c (AP 1).
    let rows = [
        ("a", [("b", 0.9), ("d", 0.8), ("c", 0.7), ("e", 0.6), ("f", 0.5)]),
        ("b", [("d", 0.9), ("a", 0.8), ("e", 0.7), ("f", 0.6), ("c", 0.5)]),
        ("c", [("e", 0.9), ("f", 0.8), ("a", 0.7), ("b", 0.6), ("d", 0.5)]),
    ];
    let table = Table(
        rows.iter()
            .flat_map(|(q, row)| row.iter().map(move |(d, s)| ((q.to_string(), d.to_string()), *s)))
            .collect(),
    );
    let ids = ["a", "b", "c", "d", "e", "f"];
    let seqs = ids.iter().map(|id| TermSequence::from_strs(*id, &["w"])).collect();
    let qrels: IndexMap<String, Relevance> = judgments(&["a", "b", "c"], &ids).into_iter().collect();
    let idx = TopicIndex::from_sequences("T", seqs, qrels, None).unwrap();
    let spec = ModelSpec::new(ModelKind::Bm25);
    let three = simulate_rounds(&idx, spec, &table, 2, 3, &[2]).map_err(|e| e.to_string())?;
    let one = simulate_rounds(&idx, spec, &table, 2, 1, &[2]).map_err(|e| e.to_string())?;
    let ap1 = three.rounds[0].mean.as_ref().map(|m| m.ap);
    ensure(ap1 == Some(2.0 / 3.0), || format!("round-1 AP {ap1:?}, expected 2/3"))?;
    ensure(one.initial == three.initial && one.rounds[..] == three.rounds[..1], || {
        "rounds = 1 is not a prefix of rounds = 3".into()
    })?;
    Ok("round-1 AP = 2/3 exactly; rounds = 1 is a prefix of rounds = 3".into())
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mirrormatch"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

type Artifacts = Vec<(String, Vec<u8>)>;

fn pipeline_once(dir: &Path) -> Result<(f64, Artifacts), String> {
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let toy = toy.to_str().unwrap();
    let data = [
        "--corpus".to_string(),
        format!("{toy}/corpus.jsonl"),
        "--topics".to_string(),
        format!("{toy}/topics.json"),
        "--qrels".to_string(),
        format!("{toy}/qrels.txt"),
    ];
    let data: Vec<&str> = data.iter().map(String::as_str).collect();
    let start = Instant::now();
    run_cli(&[&["ingest"], &data[..], &["--out", "ingest.json"]].concat(), dir)?;
    run_cli(&[&["train-embeddings"], &data[..], &["--seed", "2019", "--out", "emb"]].concat(), dir)?;
    run_cli(&[&["rank"], &data[..], &["--embeddings", "emb", "--out", "run.txt"]].concat(), dir)?;
    let eval = ["evaluate", "--run", "run.txt", "--qrels", data[5], "--out", "eval.csv", "--summary", "eval.json"];
    run_cli(&eval, dir)?;
    let secs = start.elapsed().as_secs_f64();
    let mut files = Vec::new();
    for name in ["ingest.json", "emb/T1.vec", "emb/T2.vec", "run.txt", "eval.csv", "eval.json"] {
        files.push((name.to_string(), std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?));
    }
    Ok((secs, files))
}

fn end_to_end() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ta, fa) = pipeline_once(a.path())?;
    let (tb, fb) = pipeline_once(b.path())?;
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    let lines = fa.iter().find(|(n, _)| n == "run.txt").map(|(_, b)| b.iter().filter(|&&c| c == b'\n').count());
    let slowest = ta.max(tb);
    ensure(slowest < 60.0, || format!("pipeline took {slowest:.1} s"))?;
    Ok(format!(
        "ingest, train, rank, evaluate in {ta:.1} s and {tb:.1} s; {} output files identical; run has {} lines",
        fa.len(),
        lines.unwrap_or(0)
    ))
}

fn two_way_oracle() -> Outcome {
    let mut r = rng(113);
    let mut total_pairs = 0;
    for topic in 0..30 {
        let emb = Arc::new(random_table(&mut r, 6, 4));
        let seqs: Vec<TermSequence> = (0..20).map(|i| random_seq(&mut r, &format!("d{i:02}"), 6, 1..=4)).collect();
        let qrels: IndexMap<String, Relevance> = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let rel = i < 2 || r.gen_bool(0.3);
                (s.doc_id.clone(), if rel { Relevance::Relevant } else { Relevance::NonRelevant })
            })
            .collect();
        let idx = TopicIndex::from_sequences("R", seqs.clone(), qrels, Some(emb.clone())).unwrap();
        let params = MatchParams::default();
        let got = two_way_pair_analysis(&idx, &params).map_err(|e| e.to_string())?;
        for qp in &got.queries {
            let qs = seqs.iter().find(|s| s.doc_id == qp.query_doc_id).unwrap();
            let scores: Vec<(String, bool, f64, f64)> = seqs
                .iter()
                .filter(|s| s.doc_id != qp.query_doc_id)
                .map(|d| {
                    let m = mirror_match(qs, d, &params, &emb).unwrap();
                    (d.doc_id.clone(), idx.is_relevant(&d.doc_id), m.q_to_d, m.d_to_q.unwrap())
                })
                .collect();
            let want = pair_wins_exhaustive(&scores);
            ensure((qp.wins, qp.pairs) == want, || {
                format!("topic {topic} query {}: {:?} vs {want:?}", qp.query_doc_id, (qp.wins, qp.pairs))
            })?;
            total_pairs += qp.pairs;
        }
    }
    Ok(format!("30 random 20-doc topics, {total_pairs} adjacent pairs, exact match"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 13] = [
        ("identity", identity),
        ("total-score symmetry", symmetry),
        ("oracle equivalence", oracle_equivalence),
        ("variant collapse", variant_collapse),
        ("window monotonicity", monotonicity),
        ("metric fixtures", metric_fixtures),
        ("WMD correctness", wmd_checks),
        ("baseline oracles", baseline_oracles),
        ("SGNS sanity", sgns_sanity),
        ("fusion fixtures", fusion_fixtures),
        ("simulation determinism", simulation_fixture),
        ("end-to-end pipeline", end_to_end),
        ("two-way analysis oracle", two_way_oracle),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
