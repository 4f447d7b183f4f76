use super::{term_counts, transport, BaselineError};
use crate::corpus::TermSequence;
use crate::embeddings::{cosine, EmbeddingTable};

/// Upper bound on distinct terms per document for the exact transport solve.
pub const WMD_MAX_DISTINCT: usize = 500;

fn vector<'a>(emb: &'a EmbeddingTable, term: &str) -> Result<&'a [f64], BaselineError> {
    emb.vector(term)
        .ok_or_else(|| BaselineError::MissingEmbedding(term.to_string()))
}

fn mean_vector(d: &TermSequence, emb: &EmbeddingTable) -> Result<Vec<f64>, BaselineError> {
    if d.is_empty() {
        return Err(BaselineError::EmptySequence);
    }
    let mut mean = vec![0.0; emb.dim()];
    for t in &d.terms {
        for (m, x) in mean.iter_mut().zip(vector(emb, t)?) {
            *m += x;
        }
    }
    let n = d.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Cosine between the mean word vectors of two documents.
pub fn avgemb_cosine(d1: &TermSequence, d2: &TermSequence, emb: &EmbeddingTable) -> Result<f64, BaselineError> {
    let (a, b) = (mean_vector(d1, emb)?, mean_vector(d2, emb)?);
    Ok(cosine(&a, &b).expect("same embedding dimension"))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Word mover's distance between normalized bag-of-words distributions with
/// Euclidean ground cost, solved exactly.
///
/// Masses are scaled to integers (`tf1 * |d2|` against `tf2 * |d1|`), so the
/// transport problem is balanced without rounding.
pub fn wmd_distance(d1: &TermSequence, d2: &TermSequence, emb: &EmbeddingTable) -> Result<f64, BaselineError> {
    if d1.is_empty() || d2.is_empty() {
        return Err(BaselineError::EmptySequence);
    }
    let (a, b) = (term_counts(d1), term_counts(d2));
    for side in [&a, &b] {
        if side.len() > WMD_MAX_DISTINCT {
            return Err(BaselineError::TooManyTokens {
                count: side.len(),
                limit: WMD_MAX_DISTINCT,
            });
        }
    }
    let (len1, len2) = (d1.len() as i64, d2.len() as i64);
    let va: Vec<&[f64]> = a.keys().map(|t| vector(emb, t)).collect::<Result<_, _>>()?;
    let vb: Vec<&[f64]> = b.keys().map(|t| vector(emb, t)).collect::<Result<_, _>>()?;

    let supply: Vec<i64> = a.values().map(|&tf| tf as i64 * len2).collect();
    let demand: Vec<i64> = b.values().map(|&tf| tf as i64 * len1).collect();
    let mut cost = Vec::with_capacity(va.len() * vb.len());
    for x in &va {
        for y in &vb {
            cost.push(euclidean(x, y));
        }
    }
    let plan = transport::solve(&supply, &demand, &cost)?;
    Ok(plan.cost / (len1 * len2) as f64)
}
