//! Documents, review topics and the text preprocessing pipeline.

mod ingest;
mod shortform;
mod tokenize;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{
    ingest_corpus, parse_documents, parse_qrels, parse_topics, read_documents, read_qrels,
    read_topics, Corpus, CorpusFormat, DocStore, QrelRow, TopicSpec, DEFAULT_TOPIC,
};
pub use shortform::expand_short_forms;
pub use tokenize::{normalize_numbers, tokenize, FLOAT_TOKEN, INT_TOKEN, PERCENT_TOKEN};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document {doc_id} has no terms left after preprocessing")]
    EmptyDocument { doc_id: String },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("duplicate doc_id {doc_id} in {scope}")]
    DuplicateDocId { scope: String, doc_id: String },
    #[error("qrel for topic {sr_id} references unknown document {doc_id}")]
    DanglingQrel { sr_id: String, doc_id: String },
    #[error("topic {sr_id} lists candidate {doc_id} which is not in the corpus")]
    UnknownCandidate { sr_id: String, doc_id: String },
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A raw bibliographic record. Text is stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            keywords: Vec::new(),
        }
    }

    /// Title, abstract and keywords joined in that order.
    pub fn full_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::with_capacity(2 + self.keywords.len());
        parts.push(&self.title);
        parts.push(&self.abstract_text);
        parts.extend(self.keywords.iter().map(String::as_str));
        parts.join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Relevant,
    NonRelevant,
}

impl Relevance {
    pub fn from_grade(grade: i64) -> Self {
        if grade > 0 {
            Relevance::Relevant
        } else {
            Relevance::NonRelevant
        }
    }

    pub fn is_relevant(self) -> bool {
        self == Relevance::Relevant
    }
}

/// One systematic review: its candidate pool and relevance judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrTopic {
    pub sr_id: String,
    pub candidates: Vec<String>,
    /// Candidates without a judgment are treated as non-relevant.
    pub qrels: BTreeMap<String, Relevance>,
}

impl SrTopic {
    pub fn relevance(&self, doc_id: &str) -> Relevance {
        self.qrels.get(doc_id).copied().unwrap_or(Relevance::NonRelevant)
    }

    pub fn relevant_ids(&self) -> Vec<&str> {
        self.candidates
            .iter()
            .filter(|id| self.relevance(id).is_relevant())
            .map(String::as_str)
            .collect()
    }

    pub fn has_judgments(&self) -> bool {
        !self.qrels.is_empty()
    }
}

/// Preprocessed, position-indexed terms of one document. Position `i`
/// (1-based) holds `terms[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSequence {
    pub doc_id: String,
    pub terms: Vec<String>,
}

impl TermSequence {
    pub fn new(doc_id: impl Into<String>, terms: Vec<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            terms,
        }
    }

    pub fn from_strs(doc_id: impl Into<String>, terms: &[&str]) -> Self {
        Self::new(doc_id, terms.iter().map(|t| t.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term at a 1-based position.
    pub fn term(&self, position: usize) -> Option<&str> {
        position
            .checked_sub(1)
            .and_then(|i| self.terms.get(i))
            .map(String::as_str)
    }

    /// Drop out-of-vocabulary terms; the survivors are re-indexed from 1.
    pub fn filter_vocab(&self, vocab: &dyn Vocabulary) -> Result<TermSequence, CorpusError> {
        let terms: Vec<String> = self.terms.iter().filter(|t| vocab.contains(t)).cloned().collect();
        if terms.is_empty() {
            return Err(CorpusError::EmptyDocument {
                doc_id: self.doc_id.clone(),
            });
        }
        Ok(TermSequence::new(self.doc_id.clone(), terms))
    }
}

/// Membership test used for vocabulary filtering.
pub trait Vocabulary {
    fn contains(&self, token: &str) -> bool;
}

impl Vocabulary for HashSet<String> {
    fn contains(&self, token: &str) -> bool {
        HashSet::contains(self, token)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

const ENGLISH_STOPWORDS: &str = include_str!("stopwords_en.txt");

impl StopWords {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Tokens of a document before vocabulary filtering: expansion, lowercasing,
/// tokenization, number normalization and stopword removal.
pub fn analyze(doc: &Document, stopwords: &StopWords) -> Vec<String> {
    let expanded = expand_short_forms(&doc.full_text());
    let lowered = expanded.to_lowercase();
    tokenize(&lowered)
        .into_iter()
        .map(|t| normalize_numbers(&t))
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Run the full pipeline, optionally restricting terms to `vocab`.
pub fn preprocess(
    doc: &Document,
    stopwords: &StopWords,
    vocab: Option<&dyn Vocabulary>,
) -> Result<TermSequence, CorpusError> {
    let mut terms = analyze(doc, stopwords);
    if let Some(vocab) = vocab {
        terms.retain(|t| vocab.contains(t));
    }
    if terms.is_empty() {
        return Err(CorpusError::EmptyDocument {
            doc_id: doc.doc_id.clone(),
        });
    }
    Ok(TermSequence::new(doc.doc_id.clone(), terms))
}
