use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{fuse_rankings, ScreeningError};
use crate::corpus::Relevance;
use crate::eval::trec::{format_run, seed_tag};
use crate::ranking::{rank_candidates, ModelSpec, RankedList, Scorer, TopicIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Relevant,
    Irrelevant,
}

impl Label {
    pub fn is_relevant(self) -> bool {
        self == Label::Relevant
    }
}

impl From<Relevance> for Label {
    fn from(r: Relevance) -> Self {
        if r.is_relevant() {
            Label::Relevant
        } else {
            Label::Irrelevant
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub doc_id: String,
    pub label: Label,
}

impl LabelEntry {
    pub fn new(doc_id: impl Into<String>, label: Label) -> Self {
        Self {
            doc_id: doc_id.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub labels_added: Vec<LabelEntry>,
    pub new_seeds: Vec<String>,
    /// Ranking of the unlabeled documents after this round, as TREC run lines.
    pub snapshot: String,
}

/// Screening state for one topic. Round 0 records the initial seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub sr_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_id: Option<String>,
    pub model: ModelSpec,
    pub seed_ids: Vec<String>,
    pub labels: IndexMap<String, Label>,
    /// Labels submitted but not yet applied by an update.
    #[serde(default)]
    pub pending: Vec<LabelEntry>,
    /// Every scorable document of the topic, seeds included.
    pub candidates: Vec<String>,
    pub history: Vec<RoundRecord>,
}

impl Session {
    /// Start a session from relevant seed documents and rank the rest.
    pub fn create(
        session_id: impl Into<String>,
        index: &TopicIndex,
        model: ModelSpec,
        seeds: &[String],
        scorer: &dyn Scorer,
    ) -> Result<(Self, RankedList), ScreeningError> {
        if seeds.is_empty() {
            return Err(ScreeningError::NoSeeds);
        }
        let mut labels = IndexMap::new();
        for s in seeds {
            if index.doc(s).is_none() {
                return Err(ScreeningError::UnknownDoc(s.clone()));
            }
            if labels.insert(s.clone(), Label::Relevant).is_some() {
                return Err(ScreeningError::AlreadyLabeled(s.clone()));
            }
        }
        let mut session = Self {
            session_id: session_id.into(),
            sr_id: index.sr_id.clone(),
            corpus_id: None,
            model,
            seed_ids: seeds.to_vec(),
            labels,
            pending: Vec::new(),
            candidates: index.doc_ids(),
            history: Vec::new(),
        };
        let ranking = session.rank(index, scorer)?;
        session.history.push(RoundRecord {
            round: 0,
            labels_added: seeds.iter().map(|s| LabelEntry::new(s.clone(), Label::Relevant)).collect(),
            new_seeds: seeds.to_vec(),
            snapshot: session.snapshot(&ranking),
        });
        Ok((session, ranking))
    }

    pub fn is_labeled(&self, doc_id: &str) -> bool {
        self.labels.contains_key(doc_id)
    }

    /// Candidates without a label, in candidate order.
    pub fn unlabeled(&self) -> Vec<String> {
        self.candidates.iter().filter(|d| !self.is_labeled(d)).cloned().collect()
    }

    pub fn round(&self) -> usize {
        self.history.last().map_or(0, |r| r.round)
    }

    fn check_topic(&self, index: &TopicIndex) -> Result<(), ScreeningError> {
        if index.sr_id != self.sr_id {
            return Err(ScreeningError::TopicMismatch {
                expected: self.sr_id.clone(),
                found: index.sr_id.clone(),
            });
        }
        Ok(())
    }

    /// Fuse one ranking per seed over the unlabeled documents. Empty once
    /// everything is labeled.
    pub fn rank(&self, index: &TopicIndex, scorer: &dyn Scorer) -> Result<RankedList, ScreeningError> {
        self.check_topic(index)?;
        let unlabeled = self.unlabeled();
        if unlabeled.is_empty() {
            return Ok(RankedList::from_ordered(self.seed_ids.join("+"), Vec::new()));
        }
        let lists = self
            .seed_ids
            .iter()
            .map(|s| rank_candidates(scorer, index, s, &unlabeled))
            .collect::<Result<Vec<_>, _>>()?;
        fuse_rankings(&lists)
    }

    /// Queue labels for the next update. Nothing is queued if any entry is
    /// rejected.
    pub fn stage_labels(&mut self, entries: &[LabelEntry]) -> Result<(), ScreeningError> {
        let known: HashSet<&str> = self.candidates.iter().map(String::as_str).collect();
        let mut seen: HashSet<&str> = self.pending.iter().map(|e| e.doc_id.as_str()).collect();
        for e in entries {
            if !known.contains(e.doc_id.as_str()) {
                return Err(ScreeningError::UnknownDoc(e.doc_id.clone()));
            }
            if self.is_labeled(&e.doc_id) || !seen.insert(e.doc_id.as_str()) {
                return Err(ScreeningError::AlreadyLabeled(e.doc_id.clone()));
            }
        }
        self.pending.extend_from_slice(entries);
        Ok(())
    }

    /// Apply pending labels, add newly relevant documents as seeds and
    /// re-rank what is still unlabeled.
    pub fn update(&mut self, index: &TopicIndex, scorer: &dyn Scorer) -> Result<RankedList, ScreeningError> {
        self.check_topic(index)?;
        let mut next = self.clone();
        let added = std::mem::take(&mut next.pending);
        let mut new_seeds = Vec::new();
        for e in &added {
            next.labels.insert(e.doc_id.clone(), e.label);
            // Documents dropped during preprocessing cannot act as queries.
            if e.label.is_relevant() && index.doc(&e.doc_id).is_some() {
                new_seeds.push(e.doc_id.clone());
            }
        }
        next.seed_ids.extend(new_seeds.iter().cloned());
        let ranking = next.rank(index, scorer)?;
        next.history.push(RoundRecord {
            round: self.round() + 1,
            labels_added: added,
            new_seeds,
            snapshot: next.snapshot(&ranking),
        });
        *self = next;
        Ok(ranking)
    }

    fn snapshot(&self, ranking: &RankedList) -> String {
        format_run(&self.sr_id, &seed_tag(self.model.name.name(), &ranking.query_doc_id), ranking)
    }
}

/// Stage `new_labels` and update in one step.
pub fn update_session(
    session: &mut Session,
    index: &TopicIndex,
    scorer: &dyn Scorer,
    new_labels: &[LabelEntry],
) -> Result<RankedList, ScreeningError> {
    let before = session.pending.clone();
    session.stage_labels(new_labels)?;
    session.update(index, scorer).inspect_err(|_| session.pending = before)
}
