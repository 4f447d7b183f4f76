use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Document, Relevance, SrTopic};

/// Documents keyed by id, in file order.
pub type DocStore = IndexMap<String, Document>;

/// Name of the implicit topic used when neither topics nor qrels are given.
pub const DEFAULT_TOPIC: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// One JSON document per line.
    #[default]
    Jsonl,
    /// A single JSON array of documents.
    JsonArray,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub sr_id: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrelRow {
    pub sr_id: String,
    pub doc_id: String,
    pub relevance: Relevance,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub docs: DocStore,
    pub topics: Vec<SrTopic>,
}

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn check_doc(doc: &Document, source_name: &str, line: usize) -> Result<(), CorpusError> {
    if doc.doc_id.trim().is_empty() {
        return Err(parse_err(source_name, line, "empty doc_id"));
    }
    Ok(())
}

pub fn parse_documents<R: Read>(
    reader: R,
    format: CorpusFormat,
    source_name: &str,
) -> Result<DocStore, CorpusError> {
    let mut store = DocStore::new();
    let mut insert = |doc: Document, line: usize| -> Result<(), CorpusError> {
        check_doc(&doc, source_name, line)?;
        if store.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateDocId {
                scope: source_name.to_string(),
                doc_id: doc.doc_id,
            });
        }
        store.insert(doc.doc_id.clone(), doc);
        Ok(())
    };

    match format {
        CorpusFormat::Jsonl => {
            for (idx, line) in BufReader::new(reader).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let doc: Document = serde_json::from_str(&line)
                    .map_err(|e| parse_err(source_name, idx + 1, e.to_string()))?;
                insert(doc, idx + 1)?;
            }
        }
        CorpusFormat::JsonArray => {
            let docs: Vec<Document> = serde_json::from_reader(reader)
                .map_err(|e| parse_err(source_name, e.line(), e.to_string()))?;
            for (idx, doc) in docs.into_iter().enumerate() {
                insert(doc, idx + 1)?;
            }
        }
    }
    Ok(store)
}

pub fn read_documents(path: impl AsRef<Path>, format: CorpusFormat) -> Result<DocStore, CorpusError> {
    let path = path.as_ref();
    parse_documents(File::open(path)?, format, &path.display().to_string())
}

/// Accepts a single topic object, an array of them, or one object per line.
pub fn parse_topics(text: &str, source_name: &str) -> Result<Vec<TopicSpec>, CorpusError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(text).map_err(|e| parse_err(source_name, e.line(), e.to_string()));
    }
    if let Ok(single) = serde_json::from_str::<TopicSpec>(text) {
        return Ok(vec![single]);
    }
    let mut topics = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        topics.push(
            serde_json::from_str(line).map_err(|e| parse_err(source_name, idx + 1, e.to_string()))?,
        );
    }
    Ok(topics)
}

pub fn read_topics(path: impl AsRef<Path>) -> Result<Vec<TopicSpec>, CorpusError> {
    let path = path.as_ref();
    parse_topics(&std::fs::read_to_string(path)?, &path.display().to_string())
}

/// TREC qrels: `<sr_id> <iteration> <doc_id> <grade>`; grades above zero are relevant.
pub fn parse_qrels<R: Read>(reader: R, source_name: &str) -> Result<Vec<QrelRow>, CorpusError> {
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(parse_err(
                source_name,
                idx + 1,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| parse_err(source_name, idx + 1, format!("bad relevance grade {:?}", fields[3])))?;
        rows.push(QrelRow {
            sr_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            relevance: Relevance::from_grade(grade),
        });
    }
    Ok(rows)
}

pub fn read_qrels(path: impl AsRef<Path>) -> Result<Vec<QrelRow>, CorpusError> {
    let path = path.as_ref();
    parse_qrels(File::open(path)?, &path.display().to_string())
}

impl Corpus {
    /// Resolve topics and qrels against the document store.
    ///
    /// Without a topic list, topics are derived from the qrels (candidates are
    /// the judged documents). Without either, every document joins one topic
    /// named `all`.
    pub fn assemble(
        docs: DocStore,
        topics: Option<Vec<TopicSpec>>,
        qrels: Vec<QrelRow>,
    ) -> Result<Self, CorpusError> {
        let specs = match topics {
            Some(specs) => specs,
            None if qrels.is_empty() => vec![TopicSpec {
                sr_id: DEFAULT_TOPIC.to_string(),
                candidates: docs.keys().cloned().collect(),
            }],
            None => {
                let mut grouped: IndexMap<&str, Vec<String>> = IndexMap::new();
                for row in &qrels {
                    if !docs.contains_key(&row.doc_id) {
                        return Err(CorpusError::DanglingQrel {
                            sr_id: row.sr_id.clone(),
                            doc_id: row.doc_id.clone(),
                        });
                    }
                    grouped.entry(&row.sr_id).or_default().push(row.doc_id.clone());
                }
                grouped
                    .into_iter()
                    .map(|(sr_id, mut candidates)| {
                        let mut seen = HashSet::new();
                        candidates.retain(|c| seen.insert(c.clone()));
                        TopicSpec {
                            sr_id: sr_id.to_string(),
                            candidates,
                        }
                    })
                    .collect()
            }
        };

        let mut topics: IndexMap<String, SrTopic> = IndexMap::new();
        for spec in specs {
            if topics.contains_key(&spec.sr_id) {
                return Err(CorpusError::InvalidDocument(format!("topic {} declared twice", spec.sr_id)));
            }
            let mut seen = HashSet::new();
            for c in &spec.candidates {
                if !seen.insert(c.as_str()) {
                    return Err(CorpusError::DuplicateDocId {
                        scope: format!("topic {}", spec.sr_id),
                        doc_id: c.clone(),
                    });
                }
                if !docs.contains_key(c) {
                    return Err(CorpusError::UnknownCandidate {
                        sr_id: spec.sr_id.clone(),
                        doc_id: c.clone(),
                    });
                }
            }
            topics.insert(
                spec.sr_id.clone(),
                SrTopic {
                    sr_id: spec.sr_id,
                    candidates: spec.candidates,
                    qrels: BTreeMap::new(),
                },
            );
        }

        for row in qrels {
            let dangling = || CorpusError::DanglingQrel {
                sr_id: row.sr_id.clone(),
                doc_id: row.doc_id.clone(),
            };
            let topic = topics.get_mut(&row.sr_id).ok_or_else(dangling)?;
            if !docs.contains_key(&row.doc_id) || !topic.candidates.contains(&row.doc_id) {
                return Err(dangling());
            }
            if topic.qrels.insert(row.doc_id.clone(), row.relevance).is_some() {
                return Err(CorpusError::DuplicateDocId {
                    scope: format!("qrels of {}", row.sr_id),
                    doc_id: row.doc_id,
                });
            }
        }

        Ok(Corpus {
            docs,
            topics: topics.into_values().collect(),
        })
    }

    pub fn topic(&self, sr_id: &str) -> Option<&SrTopic> {
        self.topics.iter().find(|t| t.sr_id == sr_id)
    }
}

/// Load documents plus optional topic and qrels files.
pub fn ingest_corpus(
    corpus_path: impl AsRef<Path>,
    format: CorpusFormat,
    topics_path: Option<&Path>,
    qrels_path: Option<&Path>,
) -> Result<Corpus, CorpusError> {
    let docs = read_documents(corpus_path, format)?;
    let topics = topics_path.map(read_topics).transpose()?;
    let qrels = qrels_path.map(read_qrels).transpose()?.unwrap_or_default();
    Corpus::assemble(docs, topics, qrels)
}
