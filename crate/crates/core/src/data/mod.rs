//! Logged bandit datasets, supervised sequence data and toy environments.

mod csv_io;
mod idx;
mod simulate;

pub(crate) use simulate::split_keys;

pub use csv_io::{load_logged_csv, read_logged_csv, write_logged_csv, CsvSchema, FeatureColumns};
pub use idx::{load_idx_pair, parse_idx_pair};
pub use simulate::{
    convert_to_bandit, count_label, enumerate_logged_outcomes, generate_counting_task, group_split,
    group_split_indices, ConvertedData, CountingTask, WeightedSample,
};

use crate::document::sha256_hex;
use crate::error::{Error, Result};

/// One logged interaction: context, chosen action, observed loss and,
/// when known, the logging policy's probability of that action.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedSample {
    pub features: Vec<f64>,
    pub action: usize,
    pub loss: f64,
    pub logged_propensity: Option<f64>,
    pub group_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDataset {
    samples: Vec<LoggedSample>,
    n_actions: usize,
    feature_dim: usize,
}

impl LoggedDataset {
    /// Validates every sample against `n_actions` and the first sample's
    /// feature dimension.
    pub fn new(samples: Vec<LoggedSample>, n_actions: usize) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidData("logged dataset must contain at least one sample".into()))?;
        let feature_dim = first.features.len();
        if n_actions == 0 {
            return Err(Error::InvalidData("number of actions must be positive".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            validate_sample(s, n_actions, feature_dim).map_err(|message| Error::Row { row: i + 1, message })?;
        }
        Ok(Self {
            samples,
            n_actions,
            feature_dim,
        })
    }

    pub fn samples(&self) -> &[LoggedSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn losses(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.loss).collect()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.action).collect()
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.features.as_slice()).collect()
    }

    pub fn has_logged_propensities(&self) -> bool {
        self.samples.iter().all(|s| s.logged_propensity.is_some())
    }

    /// Logged propensities, or an error naming the first sample without one.
    pub fn logged_propensities(&self) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.logged_propensity.ok_or_else(|| Error::Row {
                    row: i + 1,
                    message: "no logged propensity".into(),
                })
            })
            .collect()
    }

    /// Smallest and largest observed loss.
    pub fn loss_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.loss), hi.max(s.loss))
            })
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        let mut out = Self::new(samples, self.n_actions)?;
        out.feature_dim = self.feature_dim;
        Ok(out)
    }

    /// Same samples with every loss shifted by `c`.
    pub fn with_translated_losses(&self, c: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.loss += c;
        }
        out
    }

    /// Returns a copy with `n_actions` raised to `k` (never lowered).
    pub fn with_n_actions(mut self, k: usize) -> Result<Self> {
        if k < self.n_actions {
            return Err(Error::InvalidArgument(format!(
                "cannot lower action count from {} to {k}",
                self.n_actions
            )));
        }
        self.n_actions = k;
        Ok(self)
    }

    pub fn group_ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().filter_map(|s| s.group_id.as_deref())
    }

    /// SHA-256 of the canonical CSV rendering.
    pub fn content_digest(&self) -> String {
        let mut buf = Vec::new();
        write_logged_csv(self, &mut buf).expect("writing to memory cannot fail");
        sha256_hex(&buf)
    }
}

fn validate_sample(s: &LoggedSample, n_actions: usize, dim: usize) -> std::result::Result<(), String> {
    if s.action >= n_actions {
        return Err(format!("action {} outside [0, {n_actions})", s.action));
    }
    if s.features.len() != dim {
        return Err(format!("{} features, expected {dim}", s.features.len()));
    }
    if let Some(j) = s.features.iter().position(|f| !f.is_finite()) {
        return Err(format!("feature f{j} is not finite"));
    }
    if !s.loss.is_finite() {
        return Err("loss is not finite".into());
    }
    if let Some(p) = s.logged_propensity {
        if !(p > 0.0 && p <= 1.0) {
            return Err(format!("propensity {p} outside (0, 1]"));
        }
    }
    Ok(())
}

/// A variable-length input sequence: symbolic tokens (one-hot rows) or
/// dense real-valued rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Sequence {
    Tokens { vocab: usize, ids: Vec<u32> },
    Rows { width: usize, values: Vec<f64> },
}

impl Sequence {
    pub fn len(&self) -> usize {
        match self {
            Sequence::Tokens { ids, .. } => ids.len(),
            Sequence::Rows { width, values } => {
                if *width == 0 {
                    0
                } else {
                    values.len() / width
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        match self {
            Sequence::Tokens { vocab, .. } => *vocab,
            Sequence::Rows { width, .. } => *width,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSample {
    pub sequence: Sequence,
    pub static_features: Vec<f64>,
    pub label: usize,
}

/// Finite world with known context distribution and full loss table.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyEnvironment {
    context_probs: Vec<f64>,
    loss_table: Vec<Vec<f64>>,
    context_features: Vec<Vec<f64>>,
}

impl ToyEnvironment {
    pub fn new(context_probs: Vec<f64>, loss_table: Vec<Vec<f64>>, context_features: Vec<Vec<f64>>) -> Result<Self> {
        let n = context_probs.len();
        if n == 0 {
            return Err(Error::InvalidData("environment needs at least one context".into()));
        }
        if loss_table.len() != n || context_features.len() != n {
            return Err(Error::InvalidData(
                "context_probs, loss_table and context_features must have one entry per context".into(),
            ));
        }
        let total: f64 = context_probs.iter().sum();
        if context_probs.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidData(format!(
                "context probabilities must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        let k = loss_table[0].len();
        if k == 0 || loss_table.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidData("loss table rows must share a positive width".into()));
        }
        if loss_table.iter().flatten().any(|l| !l.is_finite()) {
            return Err(Error::InvalidData("loss table must be finite".into()));
        }
        let d = context_features[0].len();
        if context_features.iter().any(|f| f.len() != d) {
            return Err(Error::InvalidData("context features must share a dimension".into()));
        }
        Ok(Self {
            context_probs,
            loss_table,
            context_features,
        })
    }

    pub fn n_contexts(&self) -> usize {
        self.context_probs.len()
    }

    pub fn n_actions(&self) -> usize {
        self.loss_table[0].len()
    }

    pub fn feature_dim(&self) -> usize {
        self.context_features[0].len()
    }

    pub fn context_probs(&self) -> &[f64] {
        &self.context_probs
    }

    pub fn loss(&self, context: usize, action: usize) -> f64 {
        self.loss_table[context][action]
    }

    pub fn context_features(&self, context: usize) -> &[f64] {
        &self.context_features[context]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(action: usize, p: Option<f64>) -> LoggedSample {
        LoggedSample {
            features: vec![0.0, 1.0],
            action,
            loss: 0.0,
            logged_propensity: p,
            group_id: None,
        }
    }

    #[test]
    fn rejects_out_of_range_action() {
        let err = LoggedDataset::new(vec![sample(0, None), sample(2, None)], 2).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_zero_propensity() {
        assert!(LoggedDataset::new(vec![sample(0, Some(0.0))], 2).is_err());
        assert!(LoggedDataset::new(vec![sample(0, Some(1.0))], 2).is_ok());
    }

    #[test]
    fn rejects_empty() {
        assert!(LoggedDataset::new(vec![], 2).is_err());
    }

    #[test]
    fn toy_env_requires_normalized_contexts() {
        let ok = ToyEnvironment::new(vec![0.5, 0.5], vec![vec![0.0, 1.0]; 2], vec![vec![1.0]; 2]);
        assert!(ok.is_ok());
        let bad = ToyEnvironment::new(vec![0.5, 0.6], vec![vec![0.0, 1.0]; 2], vec![vec![1.0]; 2]);
        assert!(bad.is_err());
    }
}
