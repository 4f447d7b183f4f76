//! Scorer registry, per-topic prepared state and seed-driven ranking.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineError, Bm25Params, CollectionStats, JmSmoothing};
use crate::corpus::{analyze, CorpusError, DocStore, Relevance, SrTopic, StopWords, TermSequence};
use crate::embeddings::{EmbeddingTable, TokenId};
use crate::mmatch::{self, MatchError, MatchParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bm25,
    Ql,
    Tfidf,
    #[serde(rename = "avgemb")]
    AvgEmb,
    #[serde(rename = "tfinner")]
    TfInner,
    Ok,
    Wmd,
    #[serde(rename = "mmatch")]
    MMatch,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Bm25,
        ModelKind::Ql,
        ModelKind::Tfidf,
        ModelKind::AvgEmb,
        ModelKind::TfInner,
        ModelKind::Ok,
        ModelKind::Wmd,
        ModelKind::MMatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bm25 => "bm25",
            ModelKind::Ql => "ql",
            ModelKind::Tfidf => "tfidf",
            ModelKind::AvgEmb => "avgemb",
            ModelKind::TfInner => "tfinner",
            ModelKind::Ok => "ok",
            ModelKind::Wmd => "wmd",
            ModelKind::MMatch => "mmatch",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, ModelKind::AvgEmb | ModelKind::Wmd | ModelKind::MMatch)
    }

    pub fn registered_names() -> Vec<&'static str> {
        Self::ALL.iter().map(|k| k.name()).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown model {name:?}; registered scorers: {}", ModelKind::registered_names().join(", "))]
pub struct UnknownModel {
    pub name: String,
}

impl FromStr for ModelKind {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownModel { name: s.to_string() })
    }
}

/// A scorer name plus every parameter it may need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelKind,
    #[serde(default)]
    pub mmatch: MatchParams,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub jm: JmSmoothing,
}

impl ModelSpec {
    pub fn new(name: ModelKind) -> Self {
        Self {
            name,
            mmatch: MatchParams::default(),
            bm25: Bm25Params::default(),
            jm: JmSmoothing::default(),
        }
    }

    pub fn mmatch(params: MatchParams) -> Self {
        Self {
            mmatch: params,
            ..Self::new(ModelKind::MMatch)
        }
    }

    /// Check every parameter group, used by the model or not, so a bad
    /// setting never sits unnoticed in a stored session.
    pub fn validate(&self) -> Result<(), ScoreError> {
        self.mmatch.validate()?;
        let invalid = |m: String| ScoreError::Baseline(BaselineError::InvalidParameter(m));
        if !(self.bm25.k1.is_finite() && self.bm25.k1 >= 0.0) {
            return Err(invalid(format!("BM25 k1 must be non-negative, got {}", self.bm25.k1)));
        }
        if !(0.0..=1.0).contains(&self.bm25.b) {
            return Err(invalid(format!("BM25 b must lie in [0, 1], got {}", self.bm25.b)));
        }
        if !(self.jm.lambda > 0.0 && self.jm.lambda < 1.0) {
            return Err(invalid(format!("JM lambda must lie in (0, 1), got {}", self.jm.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("model {0} needs word embeddings but the topic has none")]
    MissingEmbeddings(ModelKind),
    #[error("score for {doc_id} is not a number")]
    NotANumber { doc_id: String },
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum RankError {
    #[error("no candidates to rank")]
    EmptyCandidateSet,
    #[error("unknown document {0}")]
    UnknownDoc(String),
    #[error("seed {0} must not be among the candidates")]
    SeedInCandidates(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// One preprocessed candidate of a topic.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDoc {
    pub seq: TermSequence,
    /// Embedding ids aligned with `seq.terms`; empty without embeddings.
    pub ids: Vec<TokenId>,
}

impl PreparedDoc {
    pub fn doc_id(&self) -> &str {
        &self.seq.doc_id
    }
}

/// Everything needed to score documents of one review topic.
#[derive(Debug, Clone)]
pub struct TopicIndex {
    pub sr_id: String,
    pub docs: IndexMap<String, PreparedDoc>,
    pub qrels: IndexMap<String, Relevance>,
    pub stats: CollectionStats,
    pub embeddings: Option<Arc<EmbeddingTable>>,
    /// Candidates with no terms left after preprocessing.
    pub dropped: Vec<String>,
}

/// Unfiltered term sequences of a topic's candidates, as fed to embedding
/// training. Documents with no surviving terms are skipped.
pub fn training_sequences(topic: &SrTopic, store: &DocStore, stopwords: &StopWords) -> Vec<TermSequence> {
    topic
        .candidates
        .iter()
        .filter_map(|id| store.get(id))
        .map(|doc| TermSequence::new(doc.doc_id.clone(), analyze(doc, stopwords)))
        .filter(|s| !s.is_empty())
        .collect()
}

impl TopicIndex {
    /// Preprocess a topic's candidates and, with embeddings, drop terms
    /// outside their vocabulary.
    pub fn build(
        topic: &SrTopic,
        store: &DocStore,
        stopwords: &StopWords,
        embeddings: Option<Arc<EmbeddingTable>>,
    ) -> Result<Self, CorpusError> {
        let mut seqs = Vec::with_capacity(topic.candidates.len());
        for id in &topic.candidates {
            let doc = store.get(id).ok_or_else(|| CorpusError::UnknownCandidate {
                sr_id: topic.sr_id.clone(),
                doc_id: id.clone(),
            })?;
            seqs.push(TermSequence::new(doc.doc_id.clone(), analyze(doc, stopwords)));
        }
        let qrels = topic
            .candidates
            .iter()
            .map(|id| (id.clone(), topic.relevance(id)))
            .collect();
        Self::from_sequences(&topic.sr_id, seqs, qrels, embeddings)
    }

    /// Build from already analyzed sequences.
    pub fn from_sequences(
        sr_id: &str,
        sequences: Vec<TermSequence>,
        qrels: IndexMap<String, Relevance>,
        embeddings: Option<Arc<EmbeddingTable>>,
    ) -> Result<Self, CorpusError> {
        let mut docs = IndexMap::new();
        let mut dropped = Vec::new();
        for seq in sequences {
            let seq = match &embeddings {
                Some(emb) => TermSequence::new(
                    seq.doc_id.clone(),
                    seq.terms.into_iter().filter(|t| emb.id(t).is_some()).collect(),
                ),
                None => seq,
            };
            if seq.is_empty() {
                dropped.push(seq.doc_id);
                continue;
            }
            let ids = match &embeddings {
                Some(emb) => emb.encode(&seq).expect("terms were filtered by this vocabulary"),
                None => Vec::new(),
            };
            if docs.contains_key(&seq.doc_id) {
                return Err(CorpusError::DuplicateDocId {
                    scope: format!("topic {sr_id}"),
                    doc_id: seq.doc_id,
                });
            }
            docs.insert(seq.doc_id.clone(), PreparedDoc { seq, ids });
        }
        let stats = CollectionStats::build(docs.values().map(|d| &d.seq))
            .map_err(|e| CorpusError::InvalidDocument(format!("topic {sr_id}: {e}")))?;
        let qrels = qrels.into_iter().filter(|(id, _)| docs.contains_key(id)).collect();
        Ok(Self {
            sr_id: sr_id.to_string(),
            docs,
            qrels,
            stats,
            embeddings,
            dropped,
        })
    }

    pub fn doc(&self, doc_id: &str) -> Option<&PreparedDoc> {
        self.docs.get(doc_id)
    }

    pub fn relevance(&self, doc_id: &str) -> Relevance {
        self.qrels.get(doc_id).copied().unwrap_or(Relevance::NonRelevant)
    }

    pub fn is_relevant(&self, doc_id: &str) -> bool {
        self.relevance(doc_id).is_relevant()
    }

    /// Relevant scorable documents in candidate order.
    pub fn relevant_ids(&self) -> Vec<String> {
        self.docs.keys().filter(|id| self.is_relevant(id)).cloned().collect()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.docs.keys().cloned().collect()
    }

    /// Every scorable document except `seed`.
    pub fn candidates_excluding(&self, seed: &str) -> Vec<String> {
        self.docs.keys().filter(|id| id.as_str() != seed).cloned().collect()
    }
}

/// Scores a candidate against a query document; higher is more similar.
pub trait Scorer: Send + Sync {
    fn score(&self, query: &PreparedDoc, candidate: &PreparedDoc) -> Result<f64, ScoreError>;
}

/// A registered model bound to one topic's statistics and embeddings.
pub struct ModelScorer<'a> {
    spec: ModelSpec,
    stats: &'a CollectionStats,
    embeddings: Option<&'a EmbeddingTable>,
}

impl<'a> ModelScorer<'a> {
    pub fn new(spec: ModelSpec, index: &'a TopicIndex) -> Result<Self, ScoreError> {
        spec.validate()?;
        let embeddings = index.embeddings.as_deref();
        if spec.name.needs_embeddings() && embeddings.is_none() {
            return Err(ScoreError::MissingEmbeddings(spec.name));
        }
        Ok(Self {
            spec,
            stats: &index.stats,
            embeddings,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn emb(&self) -> &'a EmbeddingTable {
        self.embeddings.expect("checked in ModelScorer::new")
    }
}

impl Scorer for ModelScorer<'_> {
    fn score(&self, q: &PreparedDoc, d: &PreparedDoc) -> Result<f64, ScoreError> {
        let s = &self.spec;
        let value = match s.name {
            ModelKind::Bm25 => baselines::bm25_score(&q.seq, &d.seq, self.stats, &s.bm25),
            ModelKind::Ql => baselines::ql_jm_score(&q.seq, &d.seq, self.stats, &s.jm)?,
            ModelKind::Tfidf => baselines::tfidf_cosine(&q.seq, &d.seq, self.stats),
            ModelKind::AvgEmb => baselines::avgemb_cosine(&q.seq, &d.seq, self.emb())?,
            ModelKind::TfInner => baselines::tf_inner(&q.seq, &d.seq),
            ModelKind::Ok => baselines::ok_sim(&q.seq, &d.seq, self.stats, &s.bm25),
            ModelKind::Wmd => -baselines::wmd_distance(&q.seq, &d.seq, self.emb())?,
            ModelKind::MMatch => mmatch::mirror_match_ids(&q.ids, &d.ids, &s.mmatch, self.emb())?.total,
        };
        Ok(value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Candidates ordered for one query; ranks are 1..n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_doc_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Sort by descending score; equal scores fall back to ascending doc id.
    pub fn from_scores(query_doc_id: impl Into<String>, mut scores: Vec<(String, f64)>) -> Self {
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(query_doc_id, scores)
    }

    /// Keep the given order and number it from 1.
    pub fn from_ordered(query_doc_id: impl Into<String>, ordered: Vec<(String, f64)>) -> Self {
        let entries = ordered
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RankedEntry {
                doc_id,
                score,
                rank: i + 1,
            })
            .collect();
        Self {
            query_doc_id: query_doc_id.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn rank_of(&self, doc_id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.doc_id == doc_id).map(|e| e.rank)
    }
}

/// Score every candidate against `seed` and sort.
pub fn rank_candidates(
    scorer: &dyn Scorer,
    index: &TopicIndex,
    seed: &str,
    candidates: &[String],
) -> Result<RankedList, RankError> {
    if candidates.is_empty() {
        return Err(RankError::EmptyCandidateSet);
    }
    let query = index.doc(seed).ok_or_else(|| RankError::UnknownDoc(seed.to_string()))?;
    let mut seen = HashSet::with_capacity(candidates.len());
    let docs: Vec<&PreparedDoc> = candidates
        .iter()
        .map(|id| {
            if id == seed {
                return Err(RankError::SeedInCandidates(id.clone()));
            }
            if !seen.insert(id.as_str()) {
                return Err(RankError::Score(ScoreError::Other(format!("candidate {id} listed twice"))));
            }
            index.doc(id).ok_or_else(|| RankError::UnknownDoc(id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let scores: Vec<(String, f64)> = docs
        .par_iter()
        .map(|d| {
            let s = scorer.score(query, d)?;
            if s.is_nan() {
                return Err(ScoreError::NotANumber {
                    doc_id: d.doc_id().to_string(),
                });
            }
            Ok((d.doc_id().to_string(), s))
        })
        .collect::<Result<_, ScoreError>>()?;
    Ok(RankedList::from_scores(seed, scores))
}
