//! File-backed state under the data directory:
//!
//! ```text
//! <data_dir>/corpora/<corpus_id>.json   uploaded documents, topics, qrels
//! <data_dir>/sessions/<session_id>.json screening state and idempotency log
//! <data_dir>/cache/                     trained embeddings
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mirrormatch::corpus::{Corpus, DocStore, Document, QrelRow, Relevance, TopicSpec};
use mirrormatch::embeddings::EmbeddingParams;
use mirrormatch::screening::Session;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrelEntry {
    pub sr_id: String,
    pub doc_id: String,
    /// Graded judgment; anything above zero is relevant.
    pub relevance: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    #[default]
    Train,
    None,
}

/// Uploaded corpus as persisted. `embeddings` holds fully resolved
/// parameters, seed included, so a reload trains (or finds in the cache)
/// exactly the same vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredCorpus {
    pub corpus_id: String,
    pub documents: Vec<Document>,
    pub topics: Option<Vec<TopicSpec>>,
    pub qrels: Vec<QrelEntry>,
    pub mode: EmbeddingMode,
    pub embeddings: Option<EmbeddingParams>,
}

impl StoredCorpus {
    pub fn corpus(&self) -> Result<Corpus> {
        let mut docs = DocStore::new();
        for d in &self.documents {
            if d.doc_id.trim().is_empty() {
                anyhow::bail!("document with empty doc_id");
            }
            if docs.insert(d.doc_id.clone(), d.clone()).is_some() {
                anyhow::bail!("duplicate doc_id {}", d.doc_id);
            }
        }
        let qrels = self
            .qrels
            .iter()
            .map(|q| QrelRow {
                sr_id: q.sr_id.clone(),
                doc_id: q.doc_id.clone(),
                relevance: Relevance::from_grade(q.relevance),
            })
            .collect();
        Ok(Corpus::assemble(docs, self.topics.clone(), qrels)?)
    }
}

/// Replayed response for a repeated `Idempotency-Key`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdempotentReply {
    pub request_hash: String,
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredSession {
    pub session: Session,
    #[serde(default)]
    pub idempotency: BTreeMap<String, IdempotentReply>,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && !id.starts_with('.')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["corpora", "sessions", "cache"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self { root })
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.root.join("cache")
    }

    /// Identifiers double as file names.
    pub fn check_id(id: &str) -> bool {
        valid_id(id)
    }

    fn corpus_path(&self, id: &str) -> PathBuf {
        self.root.join("corpora").join(format!("{id}.json"))
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    pub fn save_corpus(&self, c: &StoredCorpus) -> Result<()> {
        write_json_atomic(&self.corpus_path(&c.corpus_id), c)
    }

    pub fn save_session(&self, s: &StoredSession) -> Result<()> {
        write_json_atomic(&self.session_path(&s.session.session_id), s)
    }

    pub fn corpora(&self) -> Result<Vec<StoredCorpus>> {
        read_all(&self.root.join("corpora"))
    }

    pub fn sessions(&self) -> Result<Vec<StoredSession>> {
        read_all(&self.root.join("sessions"))
    }
}

/// Write to a sibling temp file, sync, then rename over the target.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        serde_json::to_writer(&mut f, value)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

fn read_all<T: DeserializeOwned>(dir: &Path) -> Result<Vec<T>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}
