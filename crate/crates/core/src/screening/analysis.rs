use serde::{Deserialize, Serialize};

use super::ScreeningError;
use crate::embeddings::EmbeddingTable;
use crate::mmatch::{mirror_match_ids, MatchParams, MatchScore};
use crate::ranking::{ModelKind, TopicIndex};

/// Pair counts for one query document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPairs {
    pub sr_id: String,
    pub query_doc_id: String,
    /// Pairs where the relevant document has the larger document-to-query score.
    pub wins: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub queries: Vec<QueryPairs>,
}

impl PairAnalysis {
    /// Mean of per-query win fractions, skipping queries without pairs.
    pub fn fraction(&self) -> Option<f64> {
        let with_pairs: Vec<&QueryPairs> = self.queries.iter().filter(|q| q.pairs > 0).collect();
        if with_pairs.is_empty() {
            return None;
        }
        let sum: f64 = with_pairs.iter().map(|q| q.wins as f64 / q.pairs as f64).sum();
        Some(sum / with_pairs.len() as f64)
    }

    /// Wins over all pairs of all queries.
    pub fn pooled_fraction(&self) -> Option<f64> {
        let pairs: usize = self.queries.iter().map(|q| q.pairs).sum();
        let wins: usize = self.queries.iter().map(|q| q.wins).sum();
        (pairs > 0).then(|| wins as f64 / pairs as f64)
    }

    pub fn extend(&mut self, other: PairAnalysis) {
        self.queries.extend(other.queries);
    }
}

fn embeddings(index: &TopicIndex) -> Result<&EmbeddingTable, ScreeningError> {
    index
        .embeddings
        .as_deref()
        .ok_or(ScreeningError::MissingEmbeddings(ModelKind::MMatch))
}

fn score(index: &TopicIndex, q: &str, d: &str, params: &MatchParams) -> Result<MatchScore, ScreeningError> {
    let emb = embeddings(index)?;
    let (q, d) = (index.doc(q).expect("topic doc"), index.doc(d).expect("topic doc"));
    Ok(mirror_match_ids(&q.ids, &d.ids, params, emb)?)
}

/// For each relevant candidate, pair it with the non-relevant candidate whose
/// query-to-document score is closest (ties to the smaller doc id) and check
/// whether the relevant one wins on the document-to-query score.
///
/// Both directions are always computed; `use_two_way` in `params` is ignored.
pub fn two_way_pair_analysis(index: &TopicIndex, params: &MatchParams) -> Result<PairAnalysis, ScreeningError> {
    let params = MatchParams {
        use_two_way: true,
        ..*params
    };
    embeddings(index)?;
    let mut out = PairAnalysis::default();
    for query in index.relevant_ids() {
        let mut rel = Vec::new();
        let mut non = Vec::new();
        for d in index.candidates_excluding(&query) {
            let s = score(index, &query, &d, &params)?;
            let entry = (s.q_to_d, s.d_to_q.expect("two-way"), d);
            if index.is_relevant(&entry.2) {
                rel.push(entry);
            } else {
                non.push(entry);
            }
        }
        non.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(&b.2)));
        let mut wins = 0;
        let mut pairs = 0;
        if !non.is_empty() {
            for (qd, dq, _) in &rel {
                let partner = &non[closest(&non, *qd)];
                pairs += 1;
                if *dq > partner.1 {
                    wins += 1;
                }
            }
        }
        out.queries.push(QueryPairs {
            sr_id: index.sr_id.clone(),
            query_doc_id: query,
            wins,
            pairs,
        });
    }
    Ok(out)
}

/// Index into `sorted` (by score, then doc id) of the entry nearest `x`.
fn closest(sorted: &[(f64, f64, String)], x: f64) -> usize {
    let p = sorted.partition_point(|e| e.0 < x);
    // Nearest distinct score on each side; within a run of equal scores the
    // first entry has the smallest doc id.
    let right = (p < sorted.len()).then_some(p);
    let left = (p > 0).then(|| {
        let v = sorted[p - 1].0;
        sorted[..p].partition_point(|e| e.0 < v)
    });
    match (left, right) {
        (Some(l), Some(r)) => {
            let (dl, dr) = (x - sorted[l].0, sorted[r].0 - x);
            if dl < dr || (dl == dr && sorted[l].2 < sorted[r].2) {
                l
            } else {
                r
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => unreachable!("non-empty slice"),
    }
}

/// Smallest normalized M-Match similarity (total / 2) over all pairs of
/// relevant documents.
pub fn topic_specificity(index: &TopicIndex, params: &MatchParams) -> Result<f64, ScreeningError> {
    let rel = index.relevant_ids();
    if rel.len() < 2 {
        return Err(ScreeningError::TooFewRelevant {
            sr_id: index.sr_id.clone(),
            relevant: rel.len(),
        });
    }
    let mut min = f64::INFINITY;
    for (i, a) in rel.iter().enumerate() {
        for b in &rel[i + 1..] {
            let total = score(index, a, b, params)?.total;
            let divisor = if params.use_two_way { 2.0 } else { 1.0 };
            min = min.min(total / divisor);
        }
    }
    Ok(min)
}
