//! Library entry points behind the CLI and the service, so both produce the
//! same rankings for the same inputs.

use std::io::Write;

use anyhow::{Context, Result};
use mirrormatch::eval::{evaluate_topic, EvalError, EvaluationSummary, MetricsReport, RunQuery};
use mirrormatch::mmatch::MatchParams;
use mirrormatch::ranking::{rank_candidates, ModelKind, ModelScorer, ModelSpec, TopicIndex};
use mirrormatch::screening::{screen_with_judgments, simulate_rounds, ScreeningError, SimulationReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Workspace;

/// Comma-separated model names, each checked against the registry.
pub fn parse_models(list: &str) -> Result<Vec<ModelKind>> {
    list.split(',')
        .map(|name| Ok(name.trim().parse::<ModelKind>()?))
        .collect()
}

pub fn model_spec(kind: ModelKind, lambda: f64, use_position: bool, use_two_way: bool) -> Result<ModelSpec> {
    let params = MatchParams::new(lambda, use_position, use_two_way)?;
    Ok(ModelSpec {
        mmatch: params,
        ..ModelSpec::new(kind)
    })
}

/// Relevant documents act as seeds; a topic without judgments uses every
/// document in turn.
pub fn seeds_for(index: &TopicIndex) -> Vec<String> {
    let relevant = index.relevant_ids();
    if relevant.is_empty() {
        index.doc_ids()
    } else {
        relevant
    }
}

/// One ranked list per (topic, seed).
pub fn rank_topics(ws: &Workspace, spec: ModelSpec) -> Result<Vec<RunQuery>> {
    let mut out = Vec::new();
    for index in ws.indices.values() {
        let scorer = ModelScorer::new(spec, index)?;
        let lists = seeds_for(index)
            .par_iter()
            .map(|seed| rank_candidates(&scorer, index, seed, &index.candidates_excluding(seed)))
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("ranking topic {}", index.sr_id))?;
        out.extend(lists.into_iter().map(|l| RunQuery::new(&index.sr_id, spec.name.name(), l)));
    }
    Ok(out)
}

/// Each relevant document as the query, averaged per topic, then across topics.
pub fn evaluate_model(ws: &Workspace, spec: ModelSpec, ks: &[usize]) -> Result<EvaluationSummary> {
    let results: Vec<Result<_, EvalError>> = ws
        .indices
        .values()
        .map(|index| {
            let scorer = ModelScorer::new(spec, index).map_err(|e| EvalError::Rank(e.into()))?;
            evaluate_topic(index, &scorer, ks)
        })
        .collect();
    Ok(EvaluationSummary::from_topics(ks, results)?)
}

pub struct ModelSimulation {
    pub spec: ModelSpec,
    pub reports: Vec<SimulationReport>,
    /// Topics with fewer than two relevant documents.
    pub skipped: Vec<String>,
}

pub fn simulate_model(
    ws: &Workspace,
    spec: ModelSpec,
    batch: usize,
    rounds: usize,
    ks: &[usize],
) -> Result<ModelSimulation> {
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for index in ws.indices.values() {
        let scorer = ModelScorer::new(spec, index)?;
        match simulate_rounds(index, spec, &scorer, batch, rounds, ks) {
            Ok(r) => reports.push(r),
            Err(ScreeningError::SkippedTopic { sr_id, .. }) => skipped.push(sr_id),
            Err(e) => return Err(e).with_context(|| format!("simulating topic {}", index.sr_id)),
        }
    }
    Ok(ModelSimulation { spec, reports, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRow {
    pub model: String,
    pub topic: String,
    pub round: usize,
    pub ap: Option<f64>,
    pub wss100: Option<f64>,
    pub queries: usize,
    pub exhausted: usize,
    pub no_relevant: usize,
}

/// Per-topic rows for every round (0 is the initial ranking), followed by an
/// `all` row averaging the topics that could be evaluated in that round.
pub fn simulation_rows(sim: &ModelSimulation) -> Vec<SimulationRow> {
    let model = sim.spec.name.name().to_string();
    let mut rows = Vec::new();
    let Some(first) = sim.reports.first() else {
        return rows;
    };
    for round in 0..=first.rounds.len() {
        let mut means: Vec<MetricsReport> = Vec::new();
        let (mut queries, mut exhausted, mut no_relevant) = (0, 0, 0);
        for rep in &sim.reports {
            let s = if round == 0 { &rep.initial } else { &rep.rounds[round - 1] };
            rows.push(SimulationRow {
                model: model.clone(),
                topic: rep.sr_id.clone(),
                round,
                ap: s.mean.as_ref().map(|m| m.ap),
                wss100: s.mean.as_ref().map(|m| m.wss100),
                queries: s.evaluated_queries,
                exhausted: s.exhausted_queries,
                no_relevant: s.no_relevant_queries,
            });
            means.extend(s.mean.clone());
            queries += s.evaluated_queries;
            exhausted += s.exhausted_queries;
            no_relevant += s.no_relevant_queries;
        }
        let all = MetricsReport::mean(&means).ok();
        rows.push(SimulationRow {
            model: model.clone(),
            topic: "all".to_string(),
            round,
            ap: all.as_ref().map(|m| m.ap),
            wss100: all.as_ref().map(|m| m.wss100),
            queries,
            exhausted,
            no_relevant,
        });
    }
    rows
}

pub fn write_simulation_csv<W: Write>(rows: &[SimulationRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "topic", "round", "ap", "wss100", "queries", "exhausted", "no_relevant"])?;
    let num = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    for r in rows {
        out.write_record([
            r.model.clone(),
            r.topic.clone(),
            r.round.to_string(),
            num(r.ap),
            num(r.wss100),
            r.queries.to_string(),
            r.exhausted.to_string(),
            r.no_relevant.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Ranking order after each simulated round for one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub model: String,
    pub sr_id: String,
    pub seed: String,
    pub round: usize,
    pub ranking: Vec<String>,
}

pub fn simulation_trace(ws: &Workspace, spec: ModelSpec, batch: usize, rounds: usize) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for index in ws.indices.values() {
        let scorer = ModelScorer::new(spec, index)?;
        for seed in index.relevant_ids() {
            let rankings = screen_with_judgments(index, spec, &scorer, &seed, batch, rounds)?;
            rows.extend(rankings.into_iter().enumerate().map(|(round, l)| TraceRow {
                model: spec.name.name().to_string(),
                sr_id: index.sr_id.clone(),
                seed: seed.clone(),
                round,
                ranking: l.doc_ids().map(str::to_string).collect(),
            }));
        }
    }
    Ok(rows)
}
