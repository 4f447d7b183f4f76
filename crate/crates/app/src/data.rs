//! Corpus loading, per-topic embeddings with an on-disk cache, and the
//! prepared per-topic indices every command works from.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use indexmap::IndexMap;
use mirrormatch::corpus::{ingest_corpus, Corpus, CorpusFormat, SrTopic, StopWords};
use mirrormatch::embeddings::{load_embeddings, save_binary, train_sgns, EmbeddingParams, EmbeddingTable};
use mirrormatch::ranking::{training_sequences, TopicIndex};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Where word vectors come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    /// Train local vectors per topic.
    Train,
    /// A word2vec or cache file shared by every topic, or a directory holding
    /// `<sr_id>.vec` / `<sr_id>.bin` per topic.
    Load(PathBuf),
    /// No vectors: only lexical models can run, on unfiltered sequences.
    None,
}

impl FromStr for EmbeddingSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Self::Train),
            "none" => Ok(Self::None),
            "" => Err("empty embedding source".to_string()),
            path => Ok(Self::Load(PathBuf::from(path))),
        }
    }
}

/// `.json` files hold an array of documents; anything else is JSON lines.
pub fn load_corpus(corpus: &Path, topics: Option<&Path>, qrels: Option<&Path>) -> Result<Corpus> {
    let format = match corpus.extension().and_then(|e| e.to_str()) {
        Some("json") => CorpusFormat::JsonArray,
        _ => CorpusFormat::Jsonl,
    };
    ingest_corpus(corpus, format, topics, qrels).with_context(|| format!("loading {}", corpus.display()))
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Content hash over documents and topics, in file order.
pub fn corpus_hash(corpus: &Corpus) -> String {
    let docs = serde_json::to_vec(&corpus.docs.values().collect::<Vec<_>>()).expect("documents serialize");
    let topics = serde_json::to_vec(&corpus.topics).expect("topics serialize");
    sha256_hex(&[&docs, &topics])
}

/// Training seed for one topic, derived from the configured seed so topics
/// do not share random streams.
pub fn topic_seed(seed: u64, sr_id: &str) -> u64 {
    let digest = Sha256::digest(sr_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

fn cache_key(corpus_hash: &str, sr_id: &str, params: &EmbeddingParams) -> String {
    let params = serde_json::to_vec(params).expect("params serialize");
    sha256_hex(&[corpus_hash.as_bytes(), sr_id.as_bytes(), &params])[..24].to_string()
}

/// Train (or fetch from `cache_dir`) the local embeddings of one topic.
pub fn topic_embeddings(
    corpus: &Corpus,
    corpus_hash: &str,
    topic: &SrTopic,
    stopwords: &StopWords,
    params: &EmbeddingParams,
    cache_dir: Option<&Path>,
) -> Result<EmbeddingTable> {
    let params = EmbeddingParams {
        rng_seed: topic_seed(params.rng_seed, &topic.sr_id),
        ..*params
    };
    let cached = cache_dir.map(|dir| dir.join(format!("{}.mmemb", cache_key(corpus_hash, &topic.sr_id, &params))));
    if let Some(path) = cached.as_ref().filter(|p| p.exists()) {
        return load_embeddings(path).with_context(|| format!("reading cached embeddings {}", path.display()));
    }
    let seqs = training_sequences(topic, &corpus.docs, stopwords);
    let table = train_sgns(&seqs, &params).with_context(|| format!("training embeddings for topic {}", topic.sr_id))?;
    if let Some(path) = cached {
        let dir = path.parent().expect("cache file has a parent");
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let tmp = path.with_extension("tmp");
        save_binary(&table, &tmp)?;
        fs::rename(&tmp, &path)?;
    }
    Ok(table)
}

fn loaded_embeddings(path: &Path, sr_id: &str) -> Result<EmbeddingTable> {
    let file = if path.is_dir() {
        ["vec", "bin", "txt"]
            .iter()
            .map(|ext| path.join(format!("{sr_id}.{ext}")))
            .find(|p| p.exists())
            .with_context(|| format!("no embeddings for topic {sr_id} in {}", path.display()))?
    } else {
        path.to_path_buf()
    };
    load_embeddings(&file).with_context(|| format!("loading embeddings {}", file.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TopicSummary {
    pub sr_id: String,
    pub candidates: usize,
    pub judged: usize,
    pub relevant: usize,
    /// Candidates left without terms after preprocessing.
    pub dropped: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<usize>,
}

/// A loaded corpus with one prepared index per topic.
pub struct Workspace {
    pub corpus: Corpus,
    pub hash: String,
    pub stopwords: StopWords,
    pub indices: IndexMap<String, Arc<TopicIndex>>,
}

impl Workspace {
    pub fn build(
        corpus: Corpus,
        source: &EmbeddingSource,
        params: &EmbeddingParams,
        cache_dir: Option<&Path>,
    ) -> Result<Self> {
        let hash = corpus_hash(&corpus);
        let stopwords = StopWords::english();
        let mut indices = IndexMap::new();
        for topic in &corpus.topics {
            let emb = match source {
                EmbeddingSource::Train => Some(topic_embeddings(&corpus, &hash, topic, &stopwords, params, cache_dir)?),
                EmbeddingSource::Load(path) => Some(loaded_embeddings(path, &topic.sr_id)?),
                EmbeddingSource::None => None,
            };
            let index = TopicIndex::build(topic, &corpus.docs, &stopwords, emb.map(Arc::new))
                .with_context(|| format!("preparing topic {}", topic.sr_id))?;
            indices.insert(topic.sr_id.clone(), Arc::new(index));
        }
        if indices.is_empty() {
            bail!("corpus defines no topics");
        }
        Ok(Self {
            corpus,
            hash,
            stopwords,
            indices,
        })
    }

    pub fn index(&self, sr_id: &str) -> Result<&Arc<TopicIndex>> {
        self.indices.get(sr_id).with_context(|| format!("unknown topic {sr_id}"))
    }

    pub fn summaries(&self) -> Vec<TopicSummary> {
        self.corpus
            .topics
            .iter()
            .map(|t| {
                let idx = &self.indices[&t.sr_id];
                TopicSummary {
                    sr_id: t.sr_id.clone(),
                    candidates: t.candidates.len(),
                    judged: t.qrels.len(),
                    relevant: t.relevant_ids().len(),
                    dropped: idx.dropped.clone(),
                    vocabulary: idx.embeddings.as_ref().map(|e| e.len()),
                }
            })
            .collect()
    }
}
