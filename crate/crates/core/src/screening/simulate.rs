use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::session::{LabelEntry, Session};
use super::ScreeningError;
use crate::eval::{EvalError, MetricsReport};
use crate::ranking::{ModelSpec, RankedList, Scorer, TopicIndex};

pub const DEFAULT_BATCH: usize = 20;
pub const DEFAULT_ROUNDS: usize = 3;

/// Metrics after one round, averaged over the queries that still had a
/// relevant document left to find.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub mean: Option<MetricsReport>,
    pub evaluated_queries: usize,
    /// Queries whose unlabeled set was already empty.
    pub exhausted_queries: usize,
    /// Queries with unlabeled documents but none relevant.
    pub no_relevant_queries: usize,
    /// Labels consumed by each query in this round, in query order.
    pub labels_consumed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub sr_id: String,
    pub batch: usize,
    pub query_doc_ids: Vec<String>,
    /// Ranking from the single initial seed, before any labels.
    pub initial: RoundSummary,
    pub rounds: Vec<RoundSummary>,
}

enum Outcome {
    Metrics(MetricsReport),
    Exhausted,
    NoRelevant,
}

fn assess(list: &RankedList, index: &TopicIndex, ks: &[usize]) -> Result<Outcome, EvalError> {
    if list.is_empty() {
        return Ok(Outcome::Exhausted);
    }
    match MetricsReport::compute(list, index, ks) {
        Ok(m) => Ok(Outcome::Metrics(m)),
        Err(EvalError::NoRelevant) => Ok(Outcome::NoRelevant),
        Err(e) => Err(e),
    }
}

fn summarize(round: usize, outcomes: &[&(Outcome, usize)]) -> Result<RoundSummary, EvalError> {
    let metrics: Vec<&MetricsReport> = outcomes
        .iter()
        .filter_map(|(o, _)| match o {
            Outcome::Metrics(m) => Some(m),
            _ => None,
        })
        .collect();
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|(o, _)| f(o)).count();
    Ok(RoundSummary {
        round,
        mean: if metrics.is_empty() {
            None
        } else {
            Some(MetricsReport::mean(metrics.iter().copied())?)
        },
        evaluated_queries: metrics.len(),
        exhausted_queries: count(|o| matches!(o, Outcome::Exhausted)),
        no_relevant_queries: count(|o| matches!(o, Outcome::NoRelevant)),
        labels_consumed: outcomes.iter().map(|(_, n)| *n).collect(),
    })
}

/// Replay screening with judgments as the oracle reviewer.
///
/// Every relevant document starts its own session as the single seed. Each
/// round labels the top `batch` documents of the current fused ranking, adds
/// the relevant ones as seeds, re-ranks, and scores the remaining unlabeled
/// ranking.
pub fn simulate_rounds(
    index: &TopicIndex,
    model: ModelSpec,
    scorer: &dyn Scorer,
    batch: usize,
    rounds: usize,
    ks: &[usize],
) -> Result<SimulationReport, ScreeningError> {
    if batch == 0 {
        return Err(ScreeningError::InvalidBatch);
    }
    let queries = index.relevant_ids();
    if queries.len() < 2 {
        return Err(ScreeningError::SkippedTopic {
            sr_id: index.sr_id.clone(),
            relevant: queries.len(),
        });
    }

    // Per query: outcome for the initial ranking, then one per round.
    let traces: Vec<Vec<(Outcome, usize)>> = queries
        .par_iter()
        .map(|q| -> Result<_, ScreeningError> {
            let rankings = screen_with_judgments(index, model, scorer, q, batch, rounds)?;
            let mut trace = Vec::with_capacity(rankings.len());
            for (r, ranking) in rankings.iter().enumerate() {
                let consumed = if r == 0 { 0 } else { batch.min(rankings[r - 1].len()) };
                trace.push((assess(ranking, index, ks)?, consumed));
            }
            Ok(trace)
        })
        .collect::<Result<_, _>>()?;

    let column = |r: usize| -> Result<RoundSummary, ScreeningError> {
        let outcomes: Vec<&(Outcome, usize)> = traces.iter().map(|t| &t[r]).collect();
        Ok(summarize(r, &outcomes)?)
    };
    Ok(SimulationReport {
        sr_id: index.sr_id.clone(),
        batch,
        query_doc_ids: queries,
        initial: column(0)?,
        rounds: (1..=rounds).map(column).collect::<Result<_, _>>()?,
    })
}

/// Screen from a single seed with judgments standing in for the reviewer.
/// Returns the initial ranking followed by the ranking after each round.
pub fn screen_with_judgments(
    index: &TopicIndex,
    model: ModelSpec,
    scorer: &dyn Scorer,
    seed: &str,
    batch: usize,
    rounds: usize,
) -> Result<Vec<RankedList>, ScreeningError> {
    if batch == 0 {
        return Err(ScreeningError::InvalidBatch);
    }
    let (mut session, mut ranking) = Session::create(seed, index, model, &[seed.to_string()], scorer)?;
    let mut out = Vec::with_capacity(rounds + 1);
    for _ in 0..rounds {
        let labels: Vec<LabelEntry> = ranking
            .doc_ids()
            .take(batch)
            .map(|d| LabelEntry::new(d, index.relevance(d).into()))
            .collect();
        let next = if labels.is_empty() {
            ranking.clone()
        } else {
            session.stage_labels(&labels)?;
            session.update(index, scorer)?
        };
        out.push(std::mem::replace(&mut ranking, next));
    }
    out.push(ranking);
    Ok(out)
}
