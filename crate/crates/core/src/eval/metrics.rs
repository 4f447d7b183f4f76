use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Relevance, SrTopic};
use crate::ranking::{RankedList, TopicIndex};

pub const DEFAULT_KS: [usize; 3] = [10, 20, 30];

/// Binary relevance lookup; anything unjudged is non-relevant.
pub trait Judgments {
    fn is_relevant(&self, doc_id: &str) -> bool;
}

macro_rules! judgments_for_map {
    ($($t:ty),*) => {$(
        impl Judgments for $t {
            fn is_relevant(&self, doc_id: &str) -> bool {
                self.get(doc_id).is_some_and(|r| r.is_relevant())
            }
        }
    )*};
}

judgments_for_map!(
    HashMap<String, Relevance>,
    BTreeMap<String, Relevance>,
    IndexMap<String, Relevance>
);

impl Judgments for SrTopic {
    fn is_relevant(&self, doc_id: &str) -> bool {
        self.relevance(doc_id).is_relevant()
    }
}

impl Judgments for TopicIndex {
    fn is_relevant(&self, doc_id: &str) -> bool {
        TopicIndex::is_relevant(self, doc_id)
    }
}

/// 1-based ranks of the relevant entries, ascending.
pub fn relevant_ranks(ranked: &RankedList, qrels: &dyn Judgments) -> Vec<usize> {
    ranked
        .entries
        .iter()
        .filter(|e| qrels.is_relevant(&e.doc_id))
        .map(|e| e.rank)
        .collect()
}

/// Mean of precision at the rank of each relevant entry.
pub fn average_precision(ranked: &RankedList, qrels: &dyn Judgments) -> Result<f64, EvalError> {
    let ranks = relevant_ranks(ranked, qrels);
    if ranks.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    let sum: f64 = ranks
        .iter()
        .enumerate()
        .map(|(found, &rank)| (found + 1) as f64 / rank as f64)
        .sum();
    Ok(sum / ranks.len() as f64)
}

fn relevant_in_top(ranked: &RankedList, qrels: &dyn Judgments, k: usize) -> usize {
    ranked
        .entries
        .iter()
        .take(k)
        .filter(|e| qrels.is_relevant(&e.doc_id))
        .count()
}

/// Relevant entries in the top `k`, divided by `k` even when the list is shorter.
pub fn precision_at_k(ranked: &RankedList, qrels: &dyn Judgments, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    Ok(relevant_in_top(ranked, qrels, k) as f64 / k as f64)
}

pub fn recall_at_k(ranked: &RankedList, qrels: &dyn Judgments, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let total = relevant_ranks(ranked, qrels).len();
    if total == 0 {
        return Err(EvalError::NoRelevant);
    }
    Ok(relevant_in_top(ranked, qrels, k) as f64 / total as f64)
}

/// Fraction of the list ranked below the last relevant entry.
pub fn wss100(ranked: &RankedList, qrels: &dyn Judgments) -> Result<f64, EvalError> {
    let last = *relevant_ranks(ranked, qrels).last().ok_or(EvalError::NoRelevant)?;
    let n = ranked.len();
    Ok((n - last) as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ap: f64,
    pub pr_at: BTreeMap<usize, f64>,
    pub re_at: BTreeMap<usize, f64>,
    pub wss100: f64,
}

impl MetricsReport {
    pub fn compute(ranked: &RankedList, qrels: &dyn Judgments, ks: &[usize]) -> Result<Self, EvalError> {
        let ap = average_precision(ranked, qrels)?;
        let mut pr_at = BTreeMap::new();
        let mut re_at = BTreeMap::new();
        for &k in ks {
            pr_at.insert(k, precision_at_k(ranked, qrels, k)?);
            re_at.insert(k, recall_at_k(ranked, qrels, k)?);
        }
        Ok(Self {
            ap,
            pr_at,
            re_at,
            wss100: wss100(ranked, qrels)?,
        })
    }

    pub fn ks(&self) -> Vec<usize> {
        self.pr_at.keys().copied().collect()
    }

    /// Unweighted mean of every metric.
    pub fn mean<'a, I>(reports: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = &'a MetricsReport>,
    {
        let reports: Vec<&MetricsReport> = reports.into_iter().collect();
        let first = reports.first().ok_or(EvalError::NoReports)?;
        let ks = first.ks();
        if reports.iter().any(|r| r.ks() != ks || r.re_at.keys().copied().collect::<Vec<_>>() != ks) {
            return Err(EvalError::MismatchedKs);
        }
        let n = reports.len() as f64;
        let avg = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
        Ok(Self {
            ap: avg(&|r| r.ap),
            pr_at: ks.iter().map(|&k| (k, avg(&|r| r.pr_at[&k]))).collect(),
            re_at: ks.iter().map(|&k| (k, avg(&|r| r.re_at[&k]))).collect(),
            wss100: avg(&|r| r.wss100),
        })
    }
}

/// Mean over per-topic reports.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport, EvalError> {
    MetricsReport::mean(reports)
}
