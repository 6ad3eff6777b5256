use std::io::{Read, Write};
use std::path::Path;

use super::{LoggedDataset, LoggedSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumns {
    /// `prefix0, prefix1, ...` as many as the header contains, contiguous from 0.
    Prefix(String),
    Named(Vec<String>),
}

/// Column mapping for logged CSV files. Optional columns are read when
/// the header contains them and otherwise leave the field absent.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub action: String,
    pub loss: String,
    pub propensity: Option<String>,
    pub group_id: Option<String>,
    pub features: FeatureColumns,
    pub n_actions: Option<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            action: "action".into(),
            loss: "loss".into(),
            propensity: Some("propensity".into()),
            group_id: Some("group_id".into()),
            features: FeatureColumns::Prefix("f".into()),
            n_actions: None,
        }
    }
}

impl CsvSchema {
    pub fn with_n_actions(mut self, k: usize) -> Self {
        self.n_actions = Some(k);
        self
    }
}

pub fn load_logged_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoggedDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_logged_csv(std::io::BufReader::new(file), schema)
}

pub fn read_logged_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<LoggedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidData(format!("cannot read CSV header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let require =
        |name: &str| find(name).ok_or_else(|| Error::InvalidData(format!("CSV header lacks column `{name}`")));

    let action_col = require(&schema.action)?;
    let loss_col = require(&schema.loss)?;
    let prop_col = schema.propensity.as_deref().and_then(find);
    let group_col = schema.group_id.as_deref().and_then(find);
    let feature_cols: Vec<usize> = match &schema.features {
        FeatureColumns::Named(names) => names.iter().map(|n| require(n)).collect::<Result<_>>()?,
        FeatureColumns::Prefix(prefix) => {
            let mut cols = Vec::new();
            while let Some(c) = find(&format!("{prefix}{}", cols.len())) {
                cols.push(c);
            }
            cols
        }
    };

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Row {
            row,
            message: format!("malformed record: {e}"),
        })?;
        let field = |col: usize| -> Result<&str> {
            record.get(col).map(str::trim).ok_or_else(|| Error::Row {
                row,
                message: format!("missing field {}", col + 1),
            })
        };
        let number = |col: usize, what: &str| -> Result<f64> {
            let raw = field(col)?;
            raw.parse::<f64>().map_err(|_| Error::Row {
                row,
                message: format!("{what}: cannot parse `{raw}` as a number"),
            })
        };

        let raw_action = field(action_col)?;
        let action: usize = raw_action.parse().map_err(|_| Error::Row {
            row,
            message: format!("action: `{raw_action}` is not a nonnegative integer"),
        })?;
        let loss = number(loss_col, "loss")?;
        let logged_propensity = match prop_col {
            Some(c) => {
                let p = number(c, "propensity")?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Row {
                        row,
                        message: format!("propensity {p} outside (0, 1]"),
                    });
                }
                Some(p)
            }
            None => None,
        };
        let group_id = match group_col {
            Some(c) => {
                let g = field(c)?;
                (!g.is_empty()).then(|| g.to_string())
            }
            None => None,
        };
        let features = feature_cols
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let v = number(c, &format!("f{j}"))?;
                if !v.is_finite() {
                    return Err(Error::Row {
                        row,
                        message: format!("feature f{j} is not finite"),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(LoggedSample {
            features,
            action,
            loss,
            logged_propensity,
            group_id,
        });
    }

    let inferred = samples.iter().map(|s| s.action + 1).max().unwrap_or(0);
    let k = match schema.n_actions {
        Some(k) => k,
        None => inferred,
    };
    LoggedDataset::new(samples, k)
}

/// Writes the canonical layout: `group_id` (when any sample has one),
/// `action`, `loss`, `propensity` (when every sample has one), `f0..`.
pub fn write_logged_csv<W: Write>(dataset: &LoggedDataset, writer: W) -> Result<()> {
    let with_groups = dataset.samples().iter().any(|s| s.group_id.is_some());
    let with_props = dataset.has_logged_propensities();
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<String> = Vec::new();
    if with_groups {
        header.push("group_id".into());
    }
    header.push("action".into());
    header.push("loss".into());
    if with_props {
        header.push("propensity".into());
    }
    header.extend((0..dataset.feature_dim()).map(|j| format!("f{j}")));
    let csv_err = |e: csv::Error| Error::InvalidData(format!("CSV write failed: {e}"));
    wtr.write_record(&header).map_err(csv_err)?;
    for s in dataset.samples() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if with_groups {
            rec.push(s.group_id.clone().unwrap_or_default());
        }
        rec.push(s.action.to_string());
        rec.push(s.loss.to_string());
        if with_props {
            rec.push(s.logged_propensity.unwrap().to_string());
        }
        rec.extend(s.features.iter().map(|f| f.to_string()));
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("CSV flush failed: {e}")))?;
    Ok(())
}
