//! TREC run files: `<sr_id> Q0 <doc_id> <rank> <score> <tag>`.
//!
//! Seed-driven runs put the seed document into the tag as `<model>/<seed_id>`,
//! so one topic can carry one ranked list per seed.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use indexmap::IndexMap;

use super::EvalError;
use crate::ranking::RankedList;

/// One ranked list of a run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunQuery {
    pub sr_id: String,
    pub tag: String,
    pub list: RankedList,
}

impl RunQuery {
    pub fn new(sr_id: impl Into<String>, model: &str, list: RankedList) -> Self {
        let tag = seed_tag(model, &list.query_doc_id);
        Self {
            sr_id: sr_id.into(),
            tag,
            list,
        }
    }
}

pub fn seed_tag(model: &str, seed: &str) -> String {
    format!("{model}/{seed}")
}

/// Seed id carried by a tag, if any.
pub fn seed_from_tag(tag: &str) -> Option<&str> {
    tag.split_once('/').map(|(_, seed)| seed).filter(|s| !s.is_empty())
}

pub fn format_run(sr_id: &str, tag: &str, list: &RankedList) -> String {
    let mut out = String::new();
    for e in &list.entries {
        writeln!(out, "{sr_id} Q0 {} {} {:.10} {tag}", e.doc_id, e.rank, e.score).expect("string write");
    }
    out
}

pub fn write_run<W: Write>(mut w: W, queries: &[RunQuery]) -> std::io::Result<()> {
    for q in queries {
        w.write_all(format_run(&q.sr_id, &q.tag, &q.list).as_bytes())?;
    }
    w.flush()
}

fn parse_error(line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Parse {
        line,
        message: message.into(),
    }
}

// (rank column, doc_id, score)
type RunRow = (usize, String, f64);

/// Group lines by `(sr_id, tag)` in first-seen order, each list sorted by its
/// rank column and renumbered from 1.
pub fn parse_run<R: Read>(reader: R) -> Result<Vec<RunQuery>, EvalError> {
    let mut groups: IndexMap<(String, String), Vec<RunRow>> = IndexMap::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 6 {
            return Err(parse_error(idx + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let rank: usize = f[3]
            .parse()
            .map_err(|_| parse_error(idx + 1, format!("bad rank {:?}", f[3])))?;
        let score: f64 = f[4]
            .parse()
            .map_err(|_| parse_error(idx + 1, format!("bad score {:?}", f[4])))?;
        groups
            .entry((f[0].to_string(), f[5].to_string()))
            .or_default()
            .push((rank, f[2].to_string(), score));
    }
    if groups.is_empty() {
        return Err(EvalError::EmptyRun);
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((sr_id, tag), mut rows) in groups {
        rows.sort_by_key(|r| r.0);
        let mut seen = HashSet::new();
        for (_, doc, _) in &rows {
            if !seen.insert(doc.as_str()) {
                return Err(parse_error(0, format!("{doc} appears twice in {sr_id} {tag}")));
            }
        }
        let query = seed_from_tag(&tag).unwrap_or("").to_string();
        if !query.is_empty() && seen.contains(query.as_str()) {
            return Err(parse_error(0, format!("seed {query} is ranked in its own list")));
        }
        let list = RankedList::from_ordered(query, rows.into_iter().map(|(_, d, s)| (d, s)).collect());
        out.push(RunQuery { sr_id, tag, list });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_then_parse() {
        let list = RankedList::from_scores("s", vec![("a".into(), 0.5), ("b".into(), 0.75)]);
        let q = RunQuery::new("T1", "mmatch", list.clone());
        let mut buf = Vec::new();
        write_run(&mut buf, &[q]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "T1 Q0 b 1 0.7500000000 mmatch/s\nT1 Q0 a 2 0.5000000000 mmatch/s\n"
        );
        let parsed = parse_run(buf.as_slice()).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].list, list);
        assert_eq!(parsed[0].sr_id, "T1");
    }

    #[test]
    fn ranks_are_authoritative() {
        let text = "T Q0 x 2 9.0 run\nT Q0 y 1 1.0 run\n";
        let parsed = parse_run(text.as_bytes()).unwrap();
        let ids: Vec<&str> = parsed[0].list.doc_ids().collect();
        assert_eq!(ids, vec!["y", "x"]);
        assert_eq!(parsed[0].list.query_doc_id, "");
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_run("".as_bytes()), Err(EvalError::EmptyRun)));
        assert!(matches!(parse_run("T Q0 x 1\n".as_bytes()), Err(EvalError::Parse { line: 1, .. })));
        assert!(parse_run("T Q0 x 1 1 r\nT Q0 x 2 1 r\n".as_bytes()).is_err());
        assert!(parse_run("T Q0 s 1 1 m/s\n".as_bytes()).is_err());
    }
}
