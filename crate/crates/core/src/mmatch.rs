//! Mirror Matching: two-way, position-windowed embedding matching.
//!
//! For every source term, the matching window is centred on the term's
//! relative position projected onto the target, with half-width
//! `floor(lambda * |target|)`. The best cosine inside the window is kept
//! (1-max pooling) and the per-term maxima are averaged. The final score sums
//! the query-to-document and document-to-query directions.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TermSequence;
use crate::embeddings::{EmbeddingTable, TokenId};

/// Absorbs representation error in `lambda * len` (e.g. `0.29 * 100`).
const FLOOR_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("cannot match an empty sequence")]
    EmptySequence,
    #[error("term {0:?} has no embedding")]
    MissingEmbedding(String),
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub lambda: f64,
    pub use_position: bool,
    pub use_two_way: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            lambda: 0.35,
            use_position: true,
            use_two_way: true,
        }
    }
}

impl MatchParams {
    pub fn new(lambda: f64, use_position: bool, use_two_way: bool) -> Result<Self, MatchError> {
        let p = Self {
            lambda,
            use_position,
            use_two_way,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_lambda(lambda: f64) -> Result<Self, MatchError> {
        Self::new(lambda, true, true)
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        if self.lambda > 0.0 && self.lambda <= 1.0 {
            Ok(())
        } else {
            Err(MatchError::InvalidLambda(self.lambda))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub total: f64,
    pub q_to_d: f64,
    /// `None` when the two-way component is disabled.
    pub d_to_q: Option<f64>,
}

/// Inclusive 1-based window in the target for source position `i`.
///
/// Centre is `round_half_up(len_tgt * i / len_src)` clamped to the target;
/// half-width is `floor(lambda * len_tgt)`.
pub fn matching_position(lambda: f64, i: usize, len_src: usize, len_tgt: usize) -> RangeInclusive<usize> {
    debug_assert!(i >= 1 && i <= len_src && len_tgt >= 1);
    let center = ((2 * len_tgt * i + len_src) / (2 * len_src)).clamp(1, len_tgt);
    let half = (lambda * len_tgt as f64 + FLOOR_EPSILON).floor() as usize;
    center.saturating_sub(half).max(1)..=(center + half).min(len_tgt)
}

/// Similarity between two vocabulary ids.
pub trait TermSimilarity {
    fn similarity(&self, a: TokenId, b: TokenId) -> f64;
}

impl TermSimilarity for EmbeddingTable {
    fn similarity(&self, a: TokenId, b: TokenId) -> f64 {
        self.cosine_ids(a, b)
    }
}

/// Lazily filled similarity matrix over the distinct terms of one pair.
/// Both directions share it, so each distinct (q, d) cosine is evaluated at
/// most once.
struct PairCache<'a, S: TermSimilarity> {
    sim: &'a S,
    q_local: Vec<usize>,
    d_local: Vec<usize>,
    q_ids: Vec<TokenId>,
    d_ids: Vec<TokenId>,
    cells: Vec<f64>,
}

fn localize(ids: &[TokenId]) -> (Vec<usize>, Vec<TokenId>) {
    let mut map: HashMap<TokenId, usize> = HashMap::new();
    let mut distinct = Vec::new();
    let local = ids
        .iter()
        .map(|&id| {
            *map.entry(id).or_insert_with(|| {
                distinct.push(id);
                distinct.len() - 1
            })
        })
        .collect();
    (local, distinct)
}

impl<'a, S: TermSimilarity> PairCache<'a, S> {
    fn new(sim: &'a S, q: &[TokenId], d: &[TokenId]) -> Self {
        let (q_local, q_ids) = localize(q);
        let (d_local, d_ids) = localize(d);
        let cells = vec![f64::NAN; q_ids.len() * d_ids.len()];
        Self {
            sim,
            q_local,
            d_local,
            q_ids,
            d_ids,
            cells,
        }
    }

    /// Similarity of query position `qi` and document position `dj` (0-based).
    fn get(&mut self, qi: usize, dj: usize) -> f64 {
        let (a, b) = (self.q_local[qi], self.d_local[dj]);
        let cell = &mut self.cells[a * self.d_ids.len() + b];
        if cell.is_nan() {
            *cell = self.sim.similarity(self.q_ids[a], self.d_ids[b]);
        }
        *cell
    }
}

#[derive(Clone, Copy)]
enum Direction {
    QueryToDoc,
    DocToQuery,
}

fn one_way<S: TermSimilarity>(cache: &mut PairCache<'_, S>, dir: Direction, params: &MatchParams) -> f64 {
    let (len_q, len_d) = (cache.q_local.len(), cache.d_local.len());
    let (len_src, len_tgt) = match dir {
        Direction::QueryToDoc => (len_q, len_d),
        Direction::DocToQuery => (len_d, len_q),
    };
    let mut sum = 0.0;
    for i in 1..=len_src {
        let window = if params.use_position {
            matching_position(params.lambda, i, len_src, len_tgt)
        } else {
            1..=len_tgt
        };
        let mut best = f64::NEG_INFINITY;
        for j in window {
            let s = match dir {
                Direction::QueryToDoc => cache.get(i - 1, j - 1),
                Direction::DocToQuery => cache.get(j - 1, i - 1),
            };
            if s > best {
                best = s;
            }
        }
        sum += best;
    }
    sum / len_src as f64
}

/// Mirror Matching over pre-encoded id sequences.
pub fn mirror_match_ids<S: TermSimilarity>(
    q: &[TokenId],
    d: &[TokenId],
    params: &MatchParams,
    sim: &S,
) -> Result<MatchScore, MatchError> {
    params.validate()?;
    if q.is_empty() || d.is_empty() {
        return Err(MatchError::EmptySequence);
    }
    let mut cache = PairCache::new(sim, q, d);
    let q_to_d = one_way(&mut cache, Direction::QueryToDoc, params);
    if !params.use_two_way {
        return Ok(MatchScore {
            total: q_to_d,
            q_to_d,
            d_to_q: None,
        });
    }
    let d_to_q = one_way(&mut cache, Direction::DocToQuery, params);
    Ok(MatchScore {
        total: q_to_d + d_to_q,
        q_to_d,
        d_to_q: Some(d_to_q),
    })
}

/// One-way score over pre-encoded ids: average of per-source-term maxima.
pub fn one_way_score_ids<S: TermSimilarity>(
    src: &[TokenId],
    tgt: &[TokenId],
    params: &MatchParams,
    sim: &S,
) -> Result<f64, MatchError> {
    params.validate()?;
    if src.is_empty() || tgt.is_empty() {
        return Err(MatchError::EmptySequence);
    }
    let mut cache = PairCache::new(sim, src, tgt);
    Ok(one_way(&mut cache, Direction::QueryToDoc, params))
}

fn encode(seq: &TermSequence, emb: &EmbeddingTable) -> Result<Vec<TokenId>, MatchError> {
    if seq.is_empty() {
        return Err(MatchError::EmptySequence);
    }
    seq.terms
        .iter()
        .map(|t| emb.id(t).ok_or_else(|| MatchError::MissingEmbedding(t.clone())))
        .collect()
}

pub fn one_way_score(
    src: &TermSequence,
    tgt: &TermSequence,
    params: &MatchParams,
    emb: &EmbeddingTable,
) -> Result<f64, MatchError> {
    one_way_score_ids(&encode(src, emb)?, &encode(tgt, emb)?, params, emb)
}

pub fn mirror_match(
    q: &TermSequence,
    d: &TermSequence,
    params: &MatchParams,
    emb: &EmbeddingTable,
) -> Result<MatchScore, MatchError> {
    mirror_match_ids(&encode(q, emb)?, &encode(d, emb)?, params, emb)
}
