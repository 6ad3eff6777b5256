//! Supervised data on disk: `supervised.csv` holds the inputs and
//! `labels.csv` the ground truth, joined on `group_id`.
//!
//! ```text
//! group_id,kind,width,static,sequence
//! 0,tokens,200,,17 0 93 4
//! 1,rows,784,,0 0.5 1 ...
//! ```

use std::collections::HashMap;
use std::path::Path;

use blbf::data::{Sequence, SupervisedSample};
use blbf::document::write_atomic;
use blbf::Error;

use crate::error::CliResult;

pub const SUPERVISED_FILE: &str = "supervised.csv";
pub const LABELS_FILE: &str = "labels.csv";

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::InvalidData(format!("{}: {e}", path.display()))
}

pub fn supervised_csv(ids: &[String], samples: &[SupervisedSample]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::InvalidData(e.to_string());
    w.write_record(["group_id", "kind", "width", "static", "sequence"])
        .map_err(map)?;
    for (id, s) in ids.iter().zip(samples) {
        let (kind, width, seq) = match &s.sequence {
            Sequence::Tokens { vocab, ids } => ("tokens", *vocab, join(ids)),
            Sequence::Rows { width, values } => ("rows", *width, join(values)),
        };
        w.write_record([id.as_str(), kind, &width.to_string(), &join(&s.static_features), &seq])
            .map_err(map)?;
    }
    Ok(w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?)
}

pub fn labels_csv(ids: &[String], labels: &[usize]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::InvalidData(e.to_string());
    w.write_record(["group_id", "label"]).map_err(map)?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()]).map_err(map)?;
    }
    Ok(w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?)
}

pub fn write_supervised(dir: &Path, ids: &[String], samples: &[SupervisedSample]) -> CliResult<()> {
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    write_atomic(dir.join(SUPERVISED_FILE), &supervised_csv(ids, samples)?)?;
    write_atomic(dir.join(LABELS_FILE), &labels_csv(ids, &labels)?)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, row: usize, what: &str) -> Result<Vec<T>, Error> {
    text.split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Row {
                row,
                message: format!("bad {what} entry `{t}`"),
            })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> CliResult<HashMap<String, usize>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = i + 1;
        let id = rec.get(0).unwrap_or_default().to_string();
        let label = rec
            .get(1)
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::Row {
                row,
                message: "missing or malformed label".into(),
            })?;
        if out.insert(id.clone(), label).is_some() {
            return Err(Error::Row {
                row,
                message: format!("duplicate group_id `{id}`"),
            }
            .into());
        }
    }
    Ok(out)
}

/// Reads `supervised.csv` and `labels.csv` from `dir`, in file order.
pub fn read_supervised(dir: &Path) -> CliResult<(Vec<String>, Vec<SupervisedSample>)> {
    let labels = read_labels(&dir.join(LABELS_FILE))?;
    let path = dir.join(SUPERVISED_FILE);
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let (mut ids, mut samples) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        let row = i + 1;
        if rec.len() != 5 {
            return Err(Error::Row {
                row,
                message: format!("expected 5 fields, found {}", rec.len()),
            }
            .into());
        }
        let id = rec[0].to_string();
        let width: usize = rec[2].trim().parse().map_err(|_| Error::Row {
            row,
            message: format!("bad width `{}`", &rec[2]),
        })?;
        let sequence = match &rec[1] {
            "tokens" => Sequence::Tokens {
                vocab: width,
                ids: parse_list(&rec[4], row, "token")?,
            },
            "rows" => Sequence::Rows {
                width,
                values: parse_list(&rec[4], row, "value")?,
            },
            other => {
                return Err(Error::Row {
                    row,
                    message: format!("unknown sequence kind `{other}`"),
                }
                .into())
            }
        };
        let label = *labels.get(&id).ok_or_else(|| Error::Row {
            row,
            message: format!("group_id `{id}` has no label"),
        })?;
        samples.push(SupervisedSample {
            sequence,
            static_features: parse_list(&rec[3], row, "static feature")?,
            label,
        });
        ids.push(id);
    }
    if samples.is_empty() {
        return Err(Error::InvalidData(format!("{} holds no samples", path.display())).into());
    }
    Ok((ids, samples))
}
