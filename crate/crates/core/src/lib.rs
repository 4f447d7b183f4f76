//! Mirror Matching: a position-aware, two-way, embedding-based document
//! similarity, plus the baselines, metrics and screening workflow around it.

pub mod baselines;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod mmatch;
pub mod ranking;
pub mod screening;

pub use mmatch::{mirror_match, MatchParams, MatchScore};
pub use ranking::{ModelKind, ModelScorer, ModelSpec, RankedList, Scorer, TopicIndex};
