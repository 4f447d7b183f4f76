//! Reference implementations written straight from the definitions, with no
//! shared code beyond the public types. Each test binary uses a subset.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use mirrormatch::corpus::TermSequence;
use mirrormatch::embeddings::{EmbeddingParams, EmbeddingTable};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn vocab_word(i: usize) -> String {
    format!("w{i:03}")
}

/// Random table with components uniform in [-1, 1].
pub fn random_table(rng: &mut ChaCha8Rng, vocab: usize, dim: usize) -> EmbeddingTable {
    let words = (0..vocab).map(vocab_word).collect();
    let vectors = (0..vocab * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    EmbeddingTable::new(words, vectors, dim, EmbeddingParams::default()).unwrap()
}

pub fn random_seq(rng: &mut ChaCha8Rng, id: &str, vocab: usize, len: std::ops::RangeInclusive<usize>) -> TermSequence {
    let n = rng.gen_range(len);
    TermSequence::new(id, (0..n).map(|_| vocab_word(rng.gen_range(0..vocab))).collect())
}

fn naive_cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Window in the target for source position `i` (1-based), as floats.
pub fn naive_window(lambda: f64, i: usize, n_src: usize, n_tgt: usize) -> (usize, usize) {
    let centre = ((n_tgt as f64) * (i as f64) / (n_src as f64) + 0.5).floor() as i64;
    let centre = centre.clamp(1, n_tgt as i64);
    let w = (lambda * n_tgt as f64 + 1e-9).floor() as i64;
    ((centre - w).max(1) as usize, (centre + w).min(n_tgt as i64) as usize)
}

pub fn naive_one_way(src: &TermSequence, tgt: &TermSequence, lambda: f64, positional: bool, emb: &EmbeddingTable) -> f64 {
    let (n, m) = (src.len(), tgt.len());
    let mut sum = 0.0;
    for i in 1..=n {
        let (lo, hi) = if positional { naive_window(lambda, i, n, m) } else { (1, m) };
        let u = emb.vector(&src.terms[i - 1]).unwrap();
        let mut best = f64::NEG_INFINITY;
        for j in lo..=hi {
            let s = naive_cosine(u, emb.vector(&tgt.terms[j - 1]).unwrap());
            if s > best {
                best = s;
            }
        }
        sum += best;
    }
    sum / n as f64
}

pub fn naive_mirror_match(q: &TermSequence, d: &TermSequence, lambda: f64, positional: bool, emb: &EmbeddingTable) -> f64 {
    naive_one_way(q, d, lambda, positional, emb) + naive_one_way(d, q, lambda, positional, emb)
}

fn counts(d: &TermSequence) -> HashMap<&str, f64> {
    let mut c = HashMap::new();
    for t in &d.terms {
        *c.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    c
}

/// Collection figures recomputed from the raw documents.
pub struct RawCollection<'a> {
    docs: &'a [TermSequence],
}

impl<'a> RawCollection<'a> {
    pub fn new(docs: &'a [TermSequence]) -> Self {
        Self { docs }
    }

    fn n(&self) -> f64 {
        self.docs.len() as f64
    }

    fn df(&self, t: &str) -> f64 {
        self.docs.iter().filter(|d| d.terms.iter().any(|x| x == t)).count() as f64
    }

    fn avgdl(&self) -> f64 {
        self.docs.iter().map(|d| d.len() as f64).sum::<f64>() / self.n()
    }

    fn p_coll(&self, t: &str) -> f64 {
        let total: usize = self.docs.iter().map(|d| d.len()).sum();
        let tf: usize = self.docs.iter().map(|d| d.terms.iter().filter(|x| *x == t).count()).sum();
        tf as f64 / total as f64
    }

    fn bm25_w(&self, t: &str, tf: f64, dl: f64, k1: f64, b: f64) -> f64 {
        let idf = (1.0 + (self.n() - self.df(t) + 0.5) / (self.df(t) + 0.5)).ln();
        idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / self.avgdl()))
    }

    pub fn bm25(&self, q: &TermSequence, d: &TermSequence, k1: f64, b: f64) -> f64 {
        let dc = counts(d);
        let distinct: HashSet<&str> = q.terms.iter().map(String::as_str).collect();
        let mut terms: Vec<&str> = distinct.into_iter().filter(|t| dc.contains_key(t)).collect();
        terms.sort();
        terms.iter().map(|t| self.bm25_w(t, dc[t], d.len() as f64, k1, b)).sum()
    }

    /// JM with weight `lambda` on the collection model.
    pub fn ql(&self, q: &TermSequence, d: &TermSequence, lambda: f64) -> f64 {
        let dc = counts(d);
        q.terms
            .iter()
            .map(|t| {
                let pd = dc.get(t.as_str()).copied().unwrap_or(0.0) / d.len() as f64;
                ((1.0 - lambda) * pd + lambda * self.p_coll(t)).ln()
            })
            .sum()
    }

    fn tfidf_vec(&self, d: &TermSequence) -> BTreeMap<String, f64> {
        counts(d)
            .into_iter()
            .map(|(t, tf)| (t.to_string(), tf * (self.n() / self.df(t)).ln()))
            .collect()
    }

    pub fn tfidf(&self, a: &TermSequence, b: &TermSequence) -> f64 {
        let (va, vb) = (self.tfidf_vec(a), self.tfidf_vec(b));
        let dot: f64 = va.iter().filter_map(|(t, x)| vb.get(t).map(|y| x * y)).sum();
        let na: f64 = va.values().map(|x| x * x).sum();
        let nb: f64 = vb.values().map(|x| x * x).sum();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na.sqrt() * nb.sqrt())
        }
    }

    pub fn ok(&self, a: &TermSequence, b: &TermSequence, k1: f64, bb: f64) -> f64 {
        let (ca, cb) = (counts(a), counts(b));
        let mut shared: Vec<&str> = ca.keys().filter(|t| cb.contains_key(*t)).copied().collect();
        shared.sort();
        shared
            .iter()
            .map(|t| self.bm25_w(t, ca[t], a.len() as f64, k1, bb) * self.bm25_w(t, cb[t], b.len() as f64, k1, bb))
            .sum()
    }
}

pub fn tf_inner(a: &TermSequence, b: &TermSequence) -> f64 {
    let (ca, cb) = (counts(a), counts(b));
    ca.iter().filter_map(|(t, x)| cb.get(t).map(|y| x * y)).sum()
}

/// Minimise `c.x` subject to `A x = b`, `x >= 0`, `b >= 0`, by the two-phase
/// tableau simplex with Bland's rule.
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    const EPS: f64 = 1e-12;
    let rows = a.len();
    let n = c.len();
    let width = n + rows + 1;
    let rhs = width - 1;
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[rhs] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + rows).collect();

    fn pivot(t: &mut [Vec<f64>], r: usize, col: usize) {
        let p = t[r][col];
        t[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
            }
        }
    }

    let optimise = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| loop {
        let entering = (0..allowed).find(|&j| {
            let rc = cost[j] - t.iter().zip(basis.iter()).map(|(row, &bi)| cost[bi] * row[j]).sum::<f64>();
            rc < -EPS
        });
        let Some(j) = entering else { break };
        let mut leave: Option<usize> = None;
        for i in 0..t.len() {
            if t[i][j] > EPS {
                let ratio = t[i][rhs] / t[i][j];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = t[l][rhs] / t[l][j];
                        if ratio < best - EPS || ((ratio - best).abs() <= EPS && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let r = leave.expect("bounded transport problem");
        pivot(t, r, j);
        basis[r] = j;
    };

    // Phase one: drive the artificial sum to zero.
    let mut phase1 = vec![0.0; width - 1];
    phase1[n..n + rows].iter_mut().for_each(|x| *x = 1.0);
    optimise(&mut t, &mut basis, &phase1, n + rows);

    // Pivot artificials out of the basis; rows that cannot are redundant.
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= n {
            match (0..n).find(|&j| t[r][j].abs() > 1e-9) {
                Some(j) => {
                    pivot(&mut t, r, j);
                    basis[r] = j;
                    r += 1;
                }
                None => {
                    t.remove(r);
                    basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    let mut cost = c.to_vec();
    cost.resize(width - 1, 0.0);
    optimise(&mut t, &mut basis, &cost, n);
    t.iter().zip(&basis).map(|(row, &bi)| cost[bi] * row[rhs]).sum()
}

/// Word mover's distance as an explicit LP over the flow matrix.
pub fn wmd_lp(d1: &TermSequence, d2: &TermSequence, emb: &EmbeddingTable) -> f64 {
    let bag = |d: &TermSequence| -> Vec<(String, f64)> {
        let mut c: BTreeMap<String, f64> = BTreeMap::new();
        for t in &d.terms {
            *c.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        c.into_iter().map(|(t, n)| (t, n / d.len() as f64)).collect()
    };
    let (p, q) = (bag(d1), bag(d2));
    let (n, m) = (p.len(), q.len());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n * m];
        (0..m).for_each(|j| row[i * m + j] = 1.0);
        a.push(row);
        b.push(p[i].1);
    }
    for j in 0..m {
        let mut row = vec![0.0; n * m];
        (0..n).for_each(|i| row[i * m + j] = 1.0);
        a.push(row);
        b.push(q[j].1);
    }
    let mut c = Vec::with_capacity(n * m);
    for (ti, _) in &p {
        for (tj, _) in &q {
            let (u, v) = (emb.vector(ti).unwrap(), emb.vector(tj).unwrap());
            c.push(u.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
        }
    }
    simplex_min(&a, &b, &c)
}

/// Exhaustive version of the adjacent-pair count for one query: try every
/// (relevant, non-relevant) pair and keep, per relevant doc, the partner with
/// the smallest (|gap|, doc id).
pub fn pair_wins_exhaustive(scores: &[(String, bool, f64, f64)]) -> (usize, usize) {
    let (mut wins, mut pairs) = (0, 0);
    for (_, rel, qd, dq) in scores.iter().filter(|s| s.1) {
        debug_assert!(*rel);
        let mut best: Option<&(String, bool, f64, f64)> = None;
        for cand in scores.iter().filter(|s| !s.1) {
            let better = match best {
                None => true,
                Some(b) => {
                    let (g, gb) = ((cand.2 - qd).abs(), (b.2 - qd).abs());
                    g < gb || (g == gb && cand.0 < b.0)
                }
            };
            if better {
                best = Some(cand);
            }
        }
        if let Some(b) = best {
            pairs += 1;
            if *dq > b.3 {
                wins += 1;
            }
        }
    }
    (wins, pairs)
}

/// Sentences drawn from one of two disjoint word clusters (`a..` and `b..`),
/// plus a few rare words that must fall below the frequency cut.
pub fn two_cluster_corpus(rng: &mut ChaCha8Rng, sentences: usize, cluster_size: usize) -> Vec<TermSequence> {
    (0..sentences)
        .map(|i| {
            let prefix = if rng.gen_bool(0.5) { "a" } else { "b" };
            let len = rng.gen_range(6..=12);
            let mut terms: Vec<String> = (0..len)
                .map(|_| format!("{prefix}{}", rng.gen_range(0..cluster_size)))
                .collect();
            if i % 250 == 0 {
                terms.push(format!("rare{i}"));
            }
            TermSequence::new(format!("s{i}"), terms)
        })
        .collect()
}

/// Fraction of sampled (anchor, same-cluster, other-cluster) triples where the
/// same-cluster word is closer to the anchor.
pub fn cluster_triple_rate(emb: &EmbeddingTable, rng: &mut ChaCha8Rng, cluster_size: usize, samples: usize) -> f64 {
    let mut ok = 0;
    for _ in 0..samples {
        let (p, o) = if rng.gen_bool(0.5) { ("a", "b") } else { ("b", "a") };
        let x = rng.gen_range(0..cluster_size);
        let mut y = rng.gen_range(0..cluster_size);
        while y == x {
            y = rng.gen_range(0..cluster_size);
        }
        let id = |w: String| emb.id(&w).expect("frequent word kept");
        let anchor = id(format!("{p}{x}"));
        let same = id(format!("{p}{y}"));
        let other = id(format!("{o}{}", rng.gen_range(0..cluster_size)));
        if emb.cosine_ids(anchor, same) > emb.cosine_ids(anchor, other) {
            ok += 1;
        }
    }
    ok as f64 / samples as f64
}
