//! Comparison scorers: lexical retrieval models, bag-of-words similarities and
//! embedding-based document similarities.

mod lexical;
mod semantic;
pub mod transport;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TermSequence;

pub use lexical::{bm25_score, bm25_weight, ok_sim, ql_jm_score, tf_inner, tfidf_cosine};
pub use semantic::{avgemb_cosine, wmd_distance, WMD_MAX_DISTINCT};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("term {term:?} has zero probability in both document and collection")]
    UndefinedLog { term: String },
    #[error("transport solver failed: {0}")]
    SolverFailure(String),
    #[error("document has {count} distinct terms, limit is {limit}")]
    TooManyTokens { count: usize, limit: usize },
    #[error("empty document")]
    EmptySequence,
    #[error("term {0:?} has no embedding")]
    MissingEmbedding(String),
    #[error("collection is empty")]
    EmptyCollection,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Per-topic statistics shared by BM25, QL, TF-IDF and OK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub doc_count: usize,
    pub doc_freq: HashMap<String, usize>,
    pub avg_doc_len: f64,
    pub coll_term_freq: HashMap<String, usize>,
    pub total_terms: usize,
}

impl CollectionStats {
    pub fn build<'a, I>(docs: I) -> Result<Self, BaselineError>
    where
        I: IntoIterator<Item = &'a TermSequence>,
    {
        let mut doc_count = 0;
        let mut total_terms = 0;
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut coll_term_freq: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            doc_count += 1;
            total_terms += doc.len();
            for (term, tf) in term_counts(doc) {
                *doc_freq.entry(term.to_string()).or_insert(0) += 1;
                *coll_term_freq.entry(term.to_string()).or_insert(0) += tf;
            }
        }
        if doc_count == 0 || total_terms == 0 {
            return Err(BaselineError::EmptyCollection);
        }
        Ok(Self {
            doc_count,
            doc_freq,
            avg_doc_len: total_terms as f64 / doc_count as f64,
            coll_term_freq,
            total_terms,
        })
    }

    pub fn df(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn ctf(&self, term: &str) -> usize {
        self.coll_term_freq.get(term).copied().unwrap_or(0)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`.
    pub fn bm25_idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.df(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// `ln(N / df)`, or 0 for terms never seen in the collection.
    pub fn idf(&self, term: &str) -> f64 {
        match self.df(term) {
            0 => 0.0,
            df => (self.doc_count as f64 / df as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

/// Which model the Jelinek-Mercer weight applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JmWeightOn {
    /// `(1 - l) * P(t|d) + l * P(t|C)`.
    #[default]
    Collection,
    /// `l * P(t|d) + (1 - l) * P(t|C)`.
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JmSmoothing {
    pub lambda: f64,
    #[serde(default)]
    pub weight_on: JmWeightOn,
}

impl Default for JmSmoothing {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            weight_on: JmWeightOn::Collection,
        }
    }
}

impl JmSmoothing {
    /// Weights `(document, collection)`.
    pub fn weights(&self) -> (f64, f64) {
        match self.weight_on {
            JmWeightOn::Collection => (1.0 - self.lambda, self.lambda),
            JmWeightOn::Document => (self.lambda, 1.0 - self.lambda),
        }
    }
}

/// Term frequencies in lexicographic term order.
pub fn term_counts(seq: &TermSequence) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for t in &seq.terms {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}
