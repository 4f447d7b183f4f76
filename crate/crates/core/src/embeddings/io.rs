//! word2vec text format and a lossless binary cache.
//!
//! Binary layout (little endian): magic `MMEMB001`, `u64` vocab size, `u64`
//! dim, the serialized training parameters as a length-prefixed JSON blob, then
//! per token a `u32` byte length, the UTF-8 bytes and `dim` `f64` values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EmbeddingError, EmbeddingParams, EmbeddingTable};

const MAGIC: &[u8; 8] = b"MMEMB001";

/// Parse word2vec text: `<vocab_size> <dim>` then `<token> <c1> ... <cdim>`.
pub fn parse_word2vec_text<R: Read>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(EmbeddingError::MalformedVector {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_count = |s: &str| {
        s.parse::<usize>().map_err(|_| EmbeddingError::MalformedVector {
            line: 1,
            reason: format!("bad header field {s:?}"),
        })
    };
    if fields.len() != 2 {
        return Err(EmbeddingError::MalformedVector {
            line: 1,
            reason: "header must be `<vocab_size> <dim>`".into(),
        });
    }
    let declared = parse_count(fields[0])?;
    let dim = parse_count(fields[1])?;
    if dim == 0 {
        return Err(EmbeddingError::MalformedVector {
            line: 1,
            reason: "dim must be positive".into(),
        });
    }

    let mut words = Vec::with_capacity(declared);
    let mut vectors = Vec::with_capacity(declared * dim);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        let token = parts.next().expect("non-empty line has a token");
        let mut count = 0;
        for part in parts {
            let value: f64 = part.parse().map_err(|_| EmbeddingError::MalformedVector {
                line: line_no,
                reason: format!("non-numeric component {part:?}"),
            })?;
            vectors.push(value);
            count += 1;
        }
        if count != dim {
            return Err(EmbeddingError::MalformedVector {
                line: line_no,
                reason: format!("expected {dim} components, found {count}"),
            });
        }
        words.push(token.to_string());
    }
    if words.len() != declared {
        return Err(EmbeddingError::HeaderMismatch {
            declared,
            found: words.len(),
            dim,
        });
    }
    EmbeddingTable::new(words, vectors, dim, EmbeddingParams::default())
}

/// Load a word2vec text file, or a binary cache when the file starts with the
/// cache magic.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable, EmbeddingError> {
    let mut file = BufReader::new(File::open(path)?);
    let head = file.fill_buf()?;
    if head.starts_with(MAGIC) {
        read_binary(file)
    } else {
        parse_word2vec_text(file)
    }
}

/// Components are written in shortest round-trip form, so reading the text
/// back reproduces every value exactly.
pub fn write_word2vec_text<W: Write>(table: &EmbeddingTable, writer: W) -> Result<(), EmbeddingError> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", table.len(), table.dim())?;
    for (id, word) in table.words().iter().enumerate() {
        w.write_all(word.as_bytes())?;
        for v in table.vector_by_id(id) {
            write!(w, " {v:?}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_word2vec_text(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    write_word2vec_text(table, File::create(path)?)
}

pub fn save_binary(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary(table, &mut w)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_binary<W: Write>(table: &EmbeddingTable, w: &mut W) -> Result<(), EmbeddingError> {
    w.write_all(MAGIC)?;
    w.write_all(&(table.len() as u64).to_le_bytes())?;
    w.write_all(&(table.dim() as u64).to_le_bytes())?;
    let params = serde_json::to_vec(table.params()).expect("params serialize");
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    w.write_all(&params)?;
    for (id, word) in table.words().iter().enumerate() {
        w.write_all(&(word.len() as u32).to_le_bytes())?;
        w.write_all(word.as_bytes())?;
        for v in table.vector_by_id(id) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn malformed(reason: &str) -> EmbeddingError {
    EmbeddingError::MalformedVector {
        line: 0,
        reason: reason.to_string(),
    }
}

pub fn read_binary<R: Read>(mut r: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(malformed("not an embedding cache"));
    }
    let mut u64buf = [0u8; 8];
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u64buf)?;
    let n = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let dim = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u32buf)?;
    let mut params = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    r.read_exact(&mut params)?;
    let params: EmbeddingParams =
        serde_json::from_slice(&params).map_err(|_| malformed("bad parameter block"))?;

    let mut words = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * dim);
    for _ in 0..n {
        r.read_exact(&mut u32buf)?;
        let mut bytes = vec![0u8; u32::from_le_bytes(u32buf) as usize];
        r.read_exact(&mut bytes)?;
        words.push(String::from_utf8(bytes).map_err(|_| malformed("token is not UTF-8"))?);
        for _ in 0..dim {
            r.read_exact(&mut u64buf)?;
            vectors.push(f64::from_le_bytes(u64buf));
        }
    }
    EmbeddingTable::new(words, vectors, dim, params)
}
