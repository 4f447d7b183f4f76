//! Word embedding tables: local skip-gram training, word2vec I/O and cosine.

mod io;
mod sgns;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{TermSequence, Vocabulary};

pub use io::{load_embeddings, parse_word2vec_text, read_binary, save_binary, save_word2vec_text, write_word2vec_text};
pub use sgns::{train_sgns, train_sgns_with_report, TrainingReport};

pub type TokenId = usize;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no token reaches the minimum count of {min_count}")]
    EmptyVocabulary { min_count: usize },
    #[error("invalid embedding parameters: {0}")]
    InvalidParams(String),
    #[error("header declares {declared} vectors of dim {dim}, body has {found}")]
    HeaderMismatch { declared: usize, found: usize, dim: usize },
    #[error("line {line}: {reason}")]
    MalformedVector { line: usize, reason: String },
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("token {0:?} has no embedding")]
    MissingToken(String),
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyper-parameters for skip-gram with negative sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub dim: usize,
    pub window: usize,
    pub min_count: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        Self {
            dim: 300,
            window: 7,
            min_count: 5,
            negative_samples: 5,
            epochs: 5,
            learning_rate: 0.025,
            rng_seed: 0,
        }
    }
}

impl EmbeddingParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidParams(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.min_count < 1 {
            return bad("min_count must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Immutable token to vector map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, TokenId>,
    vectors: Vec<f64>,
    sq_norms: Vec<f64>,
    params: EmbeddingParams,
}

impl EmbeddingTable {
    /// Build from parallel word and row-major vector data.
    pub fn new(
        words: Vec<String>,
        vectors: Vec<f64>,
        dim: usize,
        params: EmbeddingParams,
    ) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::InvalidParams("dim must be at least 1".into()));
        }
        if vectors.len() != words.len() * dim {
            return Err(EmbeddingError::HeaderMismatch {
                declared: words.len(),
                found: vectors.len() / dim,
                dim,
            });
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::MalformedVector {
                line: pos / dim + 1,
                reason: format!("non-finite component in vector of {:?}", words[pos / dim]),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateToken(w.clone()));
            }
        }
        let sq_norms = vectors.chunks_exact(dim).map(|v| dot(v, v)).collect();
        Ok(Self {
            dim,
            words,
            index,
            vectors,
            sq_norms,
            params: EmbeddingParams { dim, ..params },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn params(&self) -> &EmbeddingParams {
        &self.params
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn word(&self, id: TokenId) -> &str {
        &self.words[id]
    }

    pub fn vector_by_id(&self, id: TokenId) -> &[f64] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.id(token).map(|id| self.vector_by_id(id))
    }

    /// Map each term of a sequence to its id.
    pub fn encode(&self, seq: &TermSequence) -> Result<Vec<TokenId>, EmbeddingError> {
        seq.terms
            .iter()
            .map(|t| self.id(t).ok_or_else(|| EmbeddingError::MissingToken(t.clone())))
            .collect()
    }

    /// Cosine between two stored vectors. Bit-identical to [`cosine`] on the
    /// same vectors, with the squared norms taken from the table.
    pub fn cosine_ids(&self, a: TokenId, b: TokenId) -> f64 {
        cosine_parts(
            dot(self.vector_by_id(a), self.vector_by_id(b)),
            self.sq_norms[a],
            self.sq_norms[b],
        )
    }
}

impl Vocabulary for EmbeddingTable {
    fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_parts(dot: f64, sq_a: f64, sq_b: f64) -> f64 {
    if sq_a == 0.0 || sq_b == 0.0 {
        return 0.0;
    }
    (dot / (sq_a * sq_b).sqrt()).clamp(-1.0, 1.0)
}

/// Cosine similarity; an all-zero argument yields 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(cosine_parts(dot(u, v), dot(u, u), dot(v, v)))
}
