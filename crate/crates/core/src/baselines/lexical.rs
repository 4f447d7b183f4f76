use super::{term_counts, BaselineError, Bm25Params, CollectionStats, JmSmoothing};
use crate::corpus::TermSequence;

/// Saturated BM25 weight of a term occurring `tf` times in a document of
/// length `doc_len`.
pub fn bm25_weight(term: &str, tf: usize, doc_len: usize, stats: &CollectionStats, params: &Bm25Params) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let tf = tf as f64;
    let norm = params.k1 * (1.0 - params.b + params.b * doc_len as f64 / stats.avg_doc_len);
    stats.bm25_idf(term) * tf * (params.k1 + 1.0) / (tf + norm)
}

/// BM25 over the distinct terms of `q`.
pub fn bm25_score(q: &TermSequence, d: &TermSequence, stats: &CollectionStats, params: &Bm25Params) -> f64 {
    let doc = term_counts(d);
    term_counts(q)
        .keys()
        .map(|t| bm25_weight(t, doc.get(t).copied().unwrap_or(0), d.len(), stats, params))
        .sum()
}

/// Query likelihood with Jelinek-Mercer smoothing, summed over every query
/// position.
pub fn ql_jm_score(
    q: &TermSequence,
    d: &TermSequence,
    stats: &CollectionStats,
    smoothing: &JmSmoothing,
) -> Result<f64, BaselineError> {
    if !(smoothing.lambda > 0.0 && smoothing.lambda < 1.0) {
        return Err(BaselineError::InvalidParameter(format!(
            "JM lambda must lie in (0, 1), got {}",
            smoothing.lambda
        )));
    }
    if d.is_empty() {
        return Err(BaselineError::EmptySequence);
    }
    let (w_doc, w_coll) = smoothing.weights();
    let doc = term_counts(d);
    let mut score = 0.0;
    for t in &q.terms {
        let p_doc = doc.get(t.as_str()).copied().unwrap_or(0) as f64 / d.len() as f64;
        let p_coll = stats.ctf(t) as f64 / stats.total_terms as f64;
        let p = w_doc * p_doc + w_coll * p_coll;
        if p <= 0.0 {
            return Err(BaselineError::UndefinedLog { term: t.clone() });
        }
        score += p.ln();
    }
    Ok(score)
}

/// Cosine between `tf * ln(N / df)` vectors.
pub fn tfidf_cosine(d1: &TermSequence, d2: &TermSequence, stats: &CollectionStats) -> f64 {
    let weights = |d: &TermSequence| -> Vec<(String, f64)> {
        term_counts(d)
            .into_iter()
            .map(|(t, tf)| (t.to_string(), tf as f64 * stats.idf(t)))
            .collect()
    };
    sparse_cosine(&weights(d1), &weights(d2))
}

/// Both inputs sorted by term. Shared terms are visited in the same order
/// whichever side comes first, which keeps the result exactly symmetric.
fn sparse_dot(a: &[(String, f64)], b: &[(String, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

fn sparse_cosine(a: &[(String, f64)], b: &[(String, f64)]) -> f64 {
    let na: f64 = a.iter().map(|(_, w)| w * w).sum();
    let nb: f64 = b.iter().map(|(_, w)| w * w).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (sparse_dot(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

/// Inner product of raw term-frequency vectors.
pub fn tf_inner(d1: &TermSequence, d2: &TermSequence) -> f64 {
    let b = term_counts(d2);
    term_counts(d1)
        .into_iter()
        .filter_map(|(t, tf)| b.get(t).map(|&tf2| (tf * tf2) as f64))
        .sum()
}

/// Inner product of per-document BM25 weight vectors.
pub fn ok_sim(d1: &TermSequence, d2: &TermSequence, stats: &CollectionStats, params: &Bm25Params) -> f64 {
    let weights = |d: &TermSequence| -> Vec<(String, f64)> {
        term_counts(d)
            .into_iter()
            .map(|(t, tf)| (t.to_string(), bm25_weight(t, tf, d.len(), stats, params)))
            .collect()
    };
    sparse_dot(&weights(d1), &weights(d2))
}
