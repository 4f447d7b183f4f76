//! Where PICO-labelled tokens fall within documents, binned to a fixed width.

use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const DEFAULT_RESOLUTION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PicoElement {
    P,
    I,
    O,
}

impl FromStr for PicoElement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" | "p" => Ok(Self::P),
            "I" | "i" => Ok(Self::I),
            "O" | "o" => Ok(Self::O),
            other => Err(format!("unknown PICO element {other:?}; expected P, I or O")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

impl LabeledDoc {
    fn validate(&self) -> Result<(), EvalError> {
        if self.tokens.len() != self.labels.len() {
            return Err(EvalError::LengthMismatch {
                doc_id: self.doc_id.clone(),
                tokens: self.tokens.len(),
                labels: self.labels.len(),
            });
        }
        match self.labels.iter().find(|l| !matches!(l.as_str(), "P" | "I" | "O" | "N")) {
            Some(l) => Err(EvalError::UnknownLabel {
                doc_id: self.doc_id.clone(),
                label: l.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// One JSON object per line; blank lines are ignored.
pub fn parse_labeled_docs<R: Read>(reader: R) -> Result<Vec<LabeledDoc>, EvalError> {
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: LabeledDoc = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub doc_id: String,
    pub length: usize,
    pub cells: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    pub element: PicoElement,
    pub resolution: usize,
    /// Longest document first.
    pub rows: Vec<GridRow>,
}

/// Bin token `p` (1-based) of a length-`L` document into `ceil(p * R / L)`.
pub fn pico_position_grid(
    docs: &[LabeledDoc],
    element: PicoElement,
    resolution: usize,
) -> Result<PositionGrid, EvalError> {
    if resolution == 0 {
        return Err(EvalError::InvalidResolution);
    }
    let wanted = match element {
        PicoElement::P => "P",
        PicoElement::I => "I",
        PicoElement::O => "O",
    };
    let mut rows = Vec::with_capacity(docs.len());
    for doc in docs {
        doc.validate()?;
        let len = doc.tokens.len();
        let mut cells = vec![false; resolution];
        for (i, label) in doc.labels.iter().enumerate() {
            if label == wanted {
                let bin = ((i + 1) * resolution).div_ceil(len);
                cells[bin - 1] = true;
            }
        }
        rows.push(GridRow {
            doc_id: doc.doc_id.clone(),
            length: len,
            cells,
        });
    }
    rows.sort_by_key(|r| std::cmp::Reverse(r.length));
    Ok(PositionGrid {
        element,
        resolution,
        rows,
    })
}

/// `doc_id,length,b1..bR` with 0/1 cells.
pub fn write_grid_csv<W: Write>(grid: &PositionGrid, w: W) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["doc_id".to_string(), "length".to_string()];
    header.extend((1..=grid.resolution).map(|b| format!("b{b}")));
    out.write_record(&header)?;
    for row in &grid.rows {
        let mut rec = vec![row.doc_id.clone(), row.length.to_string()];
        rec.extend(row.cells.iter().map(|&c| if c { "1" } else { "0" }.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, labels: &[&str]) -> LabeledDoc {
        LabeledDoc {
            doc_id: id.into(),
            tokens: (0..labels.len()).map(|i| format!("t{i}")).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn direct_binning() {
        let mut labels = vec!["N"; 10];
        labels[0] = "P";
        labels[1] = "P";
        labels[5] = "I";
        let g = pico_position_grid(&[doc("a", &labels)], PicoElement::P, 10).unwrap();
        let set: Vec<usize> = (0..10).filter(|&b| g.rows[0].cells[b]).map(|b| b + 1).collect();
        assert_eq!(set, vec![1, 2]);
    }

    #[test]
    fn coarse_and_fine_resolution() {
        // last token always lands in the last bin
        let g = pico_position_grid(&[doc("a", &["N", "N", "O"])], PicoElement::O, 200).unwrap();
        assert!(g.rows[0].cells[199]);
        assert_eq!(g.rows[0].cells.iter().filter(|&&c| c).count(), 1);
        let g = pico_position_grid(&[doc("a", &["O"; 9])], PicoElement::O, 2).unwrap();
        assert_eq!(g.rows[0].cells, vec![true, true]);
    }

    #[test]
    fn unlabeled_doc_gives_empty_row() {
        let g = pico_position_grid(&[doc("a", &["N", "I"])], PicoElement::P, 5).unwrap();
        assert!(g.rows[0].cells.iter().all(|&c| !c));
    }

    #[test]
    fn rows_sorted_by_length() {
        let docs = [doc("short", &["N"; 10]), doc("long", &["N"; 30]), doc("mid", &["N"; 10])];
        let g = pico_position_grid(&docs, PicoElement::P, 4).unwrap();
        let order: Vec<&str> = g.rows.iter().map(|r| r.doc_id.as_str()).collect();
        assert_eq!(order, vec!["long", "short", "mid"]);
    }

    #[test]
    fn bad_input() {
        assert!(matches!(
            pico_position_grid(&[doc("a", &["X"])], PicoElement::P, 5),
            Err(EvalError::UnknownLabel { .. })
        ));
        let text = r#"{"doc_id":"a","tokens":["x","y"],"labels":["P"]}"#;
        assert!(matches!(
            parse_labeled_docs(text.as_bytes()),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn csv_cells() {
        let g = pico_position_grid(&[doc("a", &["P", "N"])], PicoElement::P, 2).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "doc_id,length,b1,b2\na,2,1,0\n");
    }
}
