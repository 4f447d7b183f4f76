//! Seed-driven screening: rank fusion over seeds, label-driven re-ranking
//! sessions, round simulation and two analyses over M-Match scores.

mod analysis;
mod session;
mod simulate;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::eval::EvalError;
use crate::mmatch::MatchError;
use crate::ranking::{ModelKind, RankError, RankedList, ScoreError};

pub use crate::ranking::rank_candidates;
pub use analysis::{topic_specificity, two_way_pair_analysis, PairAnalysis, QueryPairs};
pub use session::{update_session, Label, LabelEntry, RoundRecord, Session};
pub use simulate::{screen_with_judgments, simulate_rounds, RoundSummary, SimulationReport, DEFAULT_BATCH, DEFAULT_ROUNDS};

#[derive(Debug, Error)]
pub enum ScreeningError {
    #[error("ranked lists cover different document sets")]
    MismatchedDocumentSets,
    #[error("nothing to fuse")]
    NoLists,
    #[error("document {0} is already labeled")]
    AlreadyLabeled(String),
    #[error("document {0} is not a candidate of this topic")]
    UnknownDoc(String),
    #[error("a session needs at least one seed document")]
    NoSeeds,
    #[error("session belongs to topic {expected}, not {found}")]
    TopicMismatch { expected: String, found: String },
    #[error("topic {sr_id} has {relevant} relevant document(s), need at least 2")]
    TooFewRelevant { sr_id: String, relevant: usize },
    #[error("topic {sr_id} skipped: {relevant} relevant document(s), need at least 2")]
    SkippedTopic { sr_id: String, relevant: usize },
    #[error("batch size must be positive")]
    InvalidBatch,
    #[error("model {0} needs word embeddings but the topic has none")]
    MissingEmbeddings(ModelKind),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Average each document's rank over the lists and sort ascending; ties go to
/// the smaller doc id. The fused score is the negated average rank.
pub fn fuse_rankings(lists: &[RankedList]) -> Result<RankedList, ScreeningError> {
    let first = lists.first().ok_or(ScreeningError::NoLists)?;
    let docs: BTreeSet<&str> = first.doc_ids().collect();
    if docs.len() != first.len() {
        return Err(ScreeningError::MismatchedDocumentSets);
    }
    for list in &lists[1..] {
        if list.len() != docs.len() || list.doc_ids().collect::<BTreeSet<_>>() != docs {
            return Err(ScreeningError::MismatchedDocumentSets);
        }
    }
    let mut rank_sum: BTreeMap<&str, usize> = docs.iter().map(|d| (*d, 0)).collect();
    for list in lists {
        for e in &list.entries {
            *rank_sum.get_mut(e.doc_id.as_str()).expect("sets checked above") += e.rank;
        }
    }

    let n = lists.len() as f64;
    let mut fused: Vec<(&str, usize)> = rank_sum.into_iter().collect();
    // Sums share the divisor, so comparing them is exact.
    fused.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let query = lists
        .iter()
        .map(|l| l.query_doc_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(RankedList::from_ordered(
        query,
        fused
            .into_iter()
            .map(|(d, s)| (d.to_string(), -(s as f64) / n))
            .collect(),
    ))
}
