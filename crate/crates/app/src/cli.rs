use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mirrormatch::corpus::{read_qrels, Relevance};
use mirrormatch::embeddings::{save_word2vec_text, EmbeddingParams};
use mirrormatch::eval::{
    evaluate_run, parse_labeled_docs, parse_run, pico_position_grid, write_grid_csv, write_run, EvaluationSummary,
    PicoElement, DEFAULT_RESOLUTION,
};
use mirrormatch::ranking::ModelSpec;
use mirrormatch::screening::{DEFAULT_BATCH, DEFAULT_ROUNDS};

use crate::data::{load_corpus, EmbeddingSource, Workspace};
use crate::pipeline::{
    evaluate_model, model_spec, parse_models, rank_topics, simulate_model, simulation_rows, simulation_trace,
    write_simulation_csv,
};
use crate::service::{serve, AppState};

#[derive(Debug, Parser)]
#[command(name = "mirrormatch", version, about = "Seed-driven screening prioritization for systematic reviews")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Documents as JSON lines, or a JSON array when the file ends in `.json`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSON list of `{"sr_id", "candidates"}`.
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// TREC qrels: `<sr_id> <iter> <doc_id> <grade>`.
    #[arg(long)]
    pub qrels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EmbeddingArgs {
    /// `train`, `none`, a vector file, or a directory of `<sr_id>.vec` files.
    #[arg(long, default_value = "train")]
    pub embeddings: EmbeddingSource,
    /// Seed for every random choice; required when training.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 300)]
    pub dim: usize,
    #[arg(long, default_value_t = 7)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: usize,
    #[arg(long, default_value_t = 5)]
    pub negative: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub learning_rate: f64,
    /// Reuse trained vectors across runs.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

impl EmbeddingArgs {
    fn params(&self) -> Result<EmbeddingParams> {
        let seed = match (&self.embeddings, self.seed) {
            (EmbeddingSource::Train, None) => bail!("training embeddings needs --seed"),
            (_, seed) => seed.unwrap_or_default(),
        };
        let p = EmbeddingParams {
            dim: self.dim,
            window: self.window,
            min_count: self.min_count,
            negative_samples: self.negative,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            rng_seed: seed,
        };
        p.validate()?;
        Ok(p)
    }

    fn workspace(&self, corpus: &CorpusArgs) -> Result<Workspace> {
        let params = self.params()?;
        let c = load_corpus(&corpus.corpus, corpus.topics.as_deref(), corpus.qrels.as_deref())?;
        Workspace::build(c, &self.embeddings, &params, self.cache_dir.as_deref())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Scorer name; `simulate` accepts a comma-separated list.
    #[arg(long, default_value = "mmatch")]
    pub model: String,
    #[arg(long, default_value_t = 0.35)]
    pub lambda: f64,
    /// Ignore term positions: every target term is in the window.
    #[arg(long)]
    pub no_position: bool,
    /// Score only query to document.
    #[arg(long)]
    pub no_two_way: bool,
}

impl ModelArgs {
    fn specs(&self) -> Result<Vec<ModelSpec>> {
        parse_models(&self.model)?
            .into_iter()
            .map(|k| model_spec(k, self.lambda, !self.no_position, !self.no_two_way))
            .collect()
    }

    fn spec(&self) -> Result<ModelSpec> {
        match self.specs()?.as_slice() {
            [one] => Ok(*one),
            _ => bail!("expected a single --model, got {:?}", self.model),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct KArgs {
    /// Cut-offs for precision and recall.
    #[arg(long = "k", value_delimiter = ',', default_value = "10,20,30")]
    pub ks: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and print per-topic counts as JSON.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train local embeddings and write `<out>/<sr_id>.vec` per topic.
    TrainEmbeddings {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank every topic's candidates against each seed and write a TREC run.
    Rank {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run file against qrels, or rank and score a model directly.
    Evaluate {
        /// TREC run to score; without it the model is ranked from `--corpus`.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        topics: Option<PathBuf>,
        #[arg(long)]
        qrels: Option<PathBuf>,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ks: KArgs,
        /// Per-query CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary with per-topic and overall means.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Replay screening rounds using the qrels as the reviewer.
    Simulate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ks: KArgs,
        #[arg(long, default_value_t = DEFAULT_BATCH)]
        batch: usize,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        rounds: usize,
        /// Per-round CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON lines with the ranking after every round for every seed.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Where P, I or O tokens fall inside labeled abstracts, as a 0/1 grid.
    PicoGrid {
        /// JSON lines of `{"doc_id", "tokens", "labels"}`.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "P")]
        element: PicoElement,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Seed for embedding training; uploads that need training are refused without it.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn report_skipped(summary: &EvaluationSummary) {
    for s in &summary.skipped {
        eprintln!("skipped topic {}: {}", s.sr_id, s.reason);
    }
}

fn write_evaluation(summary: &EvaluationSummary, out: Option<&Path>, json: Option<&Path>) -> Result<()> {
    report_skipped(summary);
    let mut w = output(out)?;
    summary.write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = json {
        let mut w = output(Some(path))?;
        serde_json::to_writer_pretty(&mut w, summary)?;
        writeln!(w)?;
        w.flush()?;
    }
    match &summary.mean {
        Some(m) => eprintln!("mean AP {:.4}  WSS100 {:.4} over {} topic(s)", m.ap, m.wss100, summary.topics.len()),
        None => eprintln!("no topic could be evaluated"),
    }
    Ok(())
}

fn qrels_by_topic(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, Relevance>>> {
    let mut out: BTreeMap<String, BTreeMap<String, Relevance>> = BTreeMap::new();
    for row in read_qrels(path).with_context(|| format!("reading {}", path.display()))? {
        out.entry(row.sr_id).or_default().insert(row.doc_id, row.relevance);
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { corpus, out } => {
            let c = load_corpus(&corpus.corpus, corpus.topics.as_deref(), corpus.qrels.as_deref())?;
            let ws = Workspace::build(c, &EmbeddingSource::None, &EmbeddingParams::default(), None)?;
            let summary = serde_json::json!({
                "hash": ws.hash,
                "documents": ws.corpus.docs.len(),
                "topics": ws.summaries(),
            });
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &summary)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::TrainEmbeddings { corpus, embeddings, out } => {
            if embeddings.embeddings != EmbeddingSource::Train {
                bail!("train-embeddings always trains; drop --embeddings");
            }
            let ws = embeddings.workspace(&corpus)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (sr_id, index) in &ws.indices {
                let table = index.embeddings.as_ref().expect("trained");
                let path = out.join(format!("{sr_id}.vec"));
                save_word2vec_text(table, &path).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("{sr_id}: {} words -> {}", table.len(), path.display());
            }
        }
        Command::Rank {
            corpus,
            embeddings,
            model,
            out,
        } => {
            let spec = model.spec()?;
            let ws = embeddings.workspace(&corpus)?;
            let run = rank_topics(&ws, spec)?;
            let mut w = output(out.as_deref())?;
            write_run(&mut w, &run)?;
            w.flush()?;
        }
        Command::Evaluate {
            run,
            corpus,
            topics,
            qrels,
            embeddings,
            model,
            ks,
            out,
            summary,
        } => {
            let result = match (run, corpus) {
                (Some(_), Some(_)) => bail!("pass either --run or --corpus, not both"),
                (Some(run), None) => {
                    let qrels = qrels.context("--run needs --qrels")?;
                    let text = File::open(&run).with_context(|| format!("opening {}", run.display()))?;
                    let queries = parse_run(text).with_context(|| format!("reading {}", run.display()))?;
                    evaluate_run(&queries, &qrels_by_topic(&qrels)?, &ks.ks)?
                }
                (None, Some(corpus)) => {
                    let spec = model.spec()?;
                    let ws = embeddings.workspace(&CorpusArgs { corpus, topics, qrels })?;
                    evaluate_model(&ws, spec, &ks.ks)?
                }
                (None, None) => bail!("evaluate needs --run (with --qrels) or --corpus"),
            };
            write_evaluation(&result, out.as_deref(), summary.as_deref())?;
        }
        Command::Simulate {
            corpus,
            embeddings,
            model,
            ks,
            batch,
            rounds,
            out,
            trace,
        } => {
            let specs = model.specs()?;
            let ws = embeddings.workspace(&corpus)?;
            let mut rows = Vec::new();
            for spec in &specs {
                let sim = simulate_model(&ws, *spec, batch, rounds, &ks.ks)?;
                for t in &sim.skipped {
                    eprintln!("{}: skipped topic {t} (fewer than 2 relevant documents)", spec.name.name());
                }
                rows.extend(simulation_rows(&sim));
            }
            let mut w = output(out.as_deref())?;
            write_simulation_csv(&rows, &mut w)?;
            w.flush()?;
            if let Some(path) = trace {
                let mut w = output(Some(&path))?;
                for spec in &specs {
                    for row in simulation_trace(&ws, *spec, batch, rounds)? {
                        serde_json::to_writer(&mut w, &row)?;
                        writeln!(w)?;
                    }
                }
                w.flush()?;
            }
        }
        Command::PicoGrid {
            labels,
            element,
            resolution,
            out,
        } => {
            let file = File::open(&labels).with_context(|| format!("opening {}", labels.display()))?;
            let docs = parse_labeled_docs(file).with_context(|| format!("reading {}", labels.display()))?;
            let grid = pico_position_grid(&docs, element, resolution)?;
            let mut w = output(out.as_deref())?;
            write_grid_csv(&grid, &mut w)?;
            w.flush()?;
        }
        Command::Serve { data_dir, addr, seed } => {
            let runtime = tokio::runtime::Runtime::new()?;
            let state = AppState::open(&data_dir, seed).with_context(|| format!("opening {}", data_dir.display()))?;
            runtime.block_on(serve(state, addr))?;
        }
    }
    Ok(())
}
