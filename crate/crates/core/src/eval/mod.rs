//! Ranking metrics, per-topic evaluation, run files and the PICO position grid.

mod metrics;
mod pico;
pub mod trec;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Relevance;
use crate::ranking::{rank_candidates, RankError, RankedList, Scorer, TopicIndex};

pub use metrics::{
    aggregate, average_precision, precision_at_k, recall_at_k, relevant_ranks, wss100, Judgments, MetricsReport,
    DEFAULT_KS,
};
pub use pico::{
    parse_labeled_docs, pico_position_grid, write_grid_csv, GridRow, LabeledDoc, PicoElement, PositionGrid,
    DEFAULT_RESOLUTION,
};
pub use trec::{parse_run, write_run, RunQuery};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ranking contains no relevant document")]
    NoRelevant,
    #[error("topic {sr_id} skipped: {relevant} relevant document(s), need at least 2")]
    SkippedTopic { sr_id: String, relevant: usize },
    #[error("document {doc_id}: unknown label {label:?}")]
    UnknownLabel { doc_id: String, label: String },
    #[error("document {doc_id}: {tokens} tokens but {labels} labels")]
    LengthMismatch { doc_id: String, tokens: usize, labels: usize },
    #[error("run references document {doc_id} unknown to topic {sr_id}")]
    UnknownDoc { sr_id: String, doc_id: String },
    #[error("run references unknown topic {0}")]
    UnknownTopic(String),
    #[error("run file is empty")]
    EmptyRun,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cut-off k must be positive")]
    InvalidK,
    #[error("reports use different cut-offs")]
    MismatchedKs,
    #[error("nothing to aggregate")]
    NoReports,
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEvaluation {
    pub query_doc_id: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEvaluation {
    pub sr_id: String,
    pub queries: Vec<QueryEvaluation>,
    /// Mean over this topic's queries.
    pub mean: MetricsReport,
}

/// Evaluate already ranked lists of one topic. Lists without any relevant
/// entry are left out of the mean.
pub fn evaluate_lists(
    sr_id: &str,
    lists: &[RankedList],
    qrels: &dyn Judgments,
    ks: &[usize],
) -> Result<TopicEvaluation, EvalError> {
    let mut queries = Vec::with_capacity(lists.len());
    for list in lists {
        match MetricsReport::compute(list, qrels, ks) {
            Ok(metrics) => queries.push(QueryEvaluation {
                query_doc_id: list.query_doc_id.clone(),
                metrics,
            }),
            Err(EvalError::NoRelevant) => continue,
            Err(e) => return Err(e),
        }
    }
    let mean = MetricsReport::mean(queries.iter().map(|q| &q.metrics)).map_err(|e| match e {
        EvalError::NoReports => EvalError::SkippedTopic {
            sr_id: sr_id.to_string(),
            relevant: 0,
        },
        e => e,
    })?;
    Ok(TopicEvaluation {
        sr_id: sr_id.to_string(),
        queries,
        mean,
    })
}

/// Use every relevant document as the query against the rest of the topic,
/// then average over queries.
pub fn evaluate_topic(index: &TopicIndex, scorer: &dyn Scorer, ks: &[usize]) -> Result<TopicEvaluation, EvalError> {
    let relevant = index.relevant_ids();
    if relevant.len() < 2 {
        return Err(EvalError::SkippedTopic {
            sr_id: index.sr_id.clone(),
            relevant: relevant.len(),
        });
    }
    let lists = relevant
        .iter()
        .map(|q| rank_candidates(scorer, index, q, &index.candidates_excluding(q)))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate_lists(&index.sr_id, &lists, index, ks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTopic {
    pub sr_id: String,
    pub reason: String,
}

/// Per-topic results plus their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub ks: Vec<usize>,
    pub topics: Vec<TopicEvaluation>,
    pub skipped: Vec<SkippedTopic>,
    pub mean: Option<MetricsReport>,
}

impl EvaluationSummary {
    pub fn from_topics(
        ks: &[usize],
        results: impl IntoIterator<Item = Result<TopicEvaluation, EvalError>>,
    ) -> Result<Self, EvalError> {
        let mut topics = Vec::new();
        let mut skipped = Vec::new();
        for r in results {
            match r {
                Ok(t) => topics.push(t),
                Err(e @ EvalError::SkippedTopic { .. }) => {
                    let sr_id = match &e {
                        EvalError::SkippedTopic { sr_id, .. } => sr_id.clone(),
                        _ => unreachable!(),
                    };
                    skipped.push(SkippedTopic {
                        sr_id,
                        reason: e.to_string(),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        let mean = if topics.is_empty() {
            None
        } else {
            Some(aggregate(&topics.iter().map(|t| t.mean.clone()).collect::<Vec<_>>())?)
        };
        Ok(Self {
            ks: ks.to_vec(),
            topics,
            skipped,
            mean,
        })
    }

    /// One row per (topic, query): `topic,query_doc_id,ap,pr@k...,re@k...,wss100`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["topic".to_string(), "query_doc_id".to_string(), "ap".to_string()];
        header.extend(self.ks.iter().map(|k| format!("pr{k}")));
        header.extend(self.ks.iter().map(|k| format!("re{k}")));
        header.push("wss100".to_string());
        out.write_record(&header)?;
        for t in &self.topics {
            for q in &t.queries {
                let m = &q.metrics;
                let mut row = vec![t.sr_id.clone(), q.query_doc_id.clone(), fmt(m.ap)];
                row.extend(self.ks.iter().map(|k| fmt(m.pr_at[k])));
                row.extend(self.ks.iter().map(|k| fmt(m.re_at[k])));
                row.push(fmt(m.wss100));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Evaluate a parsed run against per-topic judgments.
///
/// Every ranked document must be judged for its topic; topics with fewer than
/// two relevant documents are reported as skipped.
pub fn evaluate_run(
    run: &[RunQuery],
    qrels: &BTreeMap<String, BTreeMap<String, Relevance>>,
    ks: &[usize],
) -> Result<EvaluationSummary, EvalError> {
    if run.is_empty() {
        return Err(EvalError::EmptyRun);
    }
    let mut by_topic: indexmap::IndexMap<&str, Vec<RankedList>> = indexmap::IndexMap::new();
    for q in run {
        let judged = qrels
            .get(&q.sr_id)
            .ok_or_else(|| EvalError::UnknownTopic(q.sr_id.clone()))?;
        if let Some(e) = q.list.entries.iter().find(|e| !judged.contains_key(&e.doc_id)) {
            return Err(EvalError::UnknownDoc {
                sr_id: q.sr_id.clone(),
                doc_id: e.doc_id.clone(),
            });
        }
        by_topic.entry(&q.sr_id).or_default().push(q.list.clone());
    }
    let results = by_topic.into_iter().map(|(sr_id, lists)| {
        let judged = &qrels[sr_id];
        let relevant = judged.values().filter(|r| r.is_relevant()).count();
        if relevant < 2 {
            return Err(EvalError::SkippedTopic {
                sr_id: sr_id.to_string(),
                relevant,
            });
        }
        evaluate_lists(sr_id, &lists, judged, ks)
    });
    EvaluationSummary::from_topics(ks, results)
}
