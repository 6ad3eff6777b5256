//! Synthetic counting task, supervised-to-bandit conversion, group-aware
//! splitting and exhaustive enumeration of toy environments.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{LoggedDataset, LoggedSample, Sequence, SupervisedSample, ToyEnvironment};
use crate::error::{Error, Result};
use crate::numeric::seeded_rng;
use crate::policy::{Featurizer, SoftmaxPolicy};

/// Parameters of the "count the zeros" sequence task.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingTask {
    pub n: usize,
    pub n_classes: usize,
    pub vocab: usize,
    pub seq_len_mean: usize,
    pub seq_len_spread: usize,
}

impl Default for CountingTask {
    fn default() -> Self {
        Self {
            n: 10_000,
            n_classes: 3,
            vocab: 200,
            seq_len_mean: 20,
            seq_len_spread: 5,
        }
    }
}

impl CountingTask {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidArgument("n_classes must be at least 2".into()));
        }
        if self.vocab == 0 {
            return Err(Error::InvalidArgument("vocab must be positive".into()));
        }
        if self.seq_len_mean <= self.seq_len_spread {
            return Err(Error::InvalidArgument(format!(
                "seq_len_mean ({}) must exceed seq_len_spread ({})",
                self.seq_len_mean, self.seq_len_spread
            )));
        }
        let max_len = self.seq_len_mean + self.seq_len_spread;
        if self.n_classes > max_len + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} classes cannot be balanced: sequences hold at most {max_len} zeros",
                self.n_classes
            )));
        }
        Ok(())
    }
}

/// Number of zero tokens, capped at `n_classes - 1`.
pub fn count_label(ids: &[u32], n_classes: usize) -> usize {
    ids.iter().filter(|&&t| t == 0).count().min(n_classes - 1)
}

pub fn generate_counting_task(task: &CountingTask, seed: u64) -> Result<Vec<SupervisedSample>> {
    task.validate()?;
    let mut rng = seeded_rng(seed);
    let budget = 100 * task.n;
    let mut attempts = 0usize;
    let lo = task.seq_len_mean - task.seq_len_spread;
    let hi = task.seq_len_mean + task.seq_len_spread;
    let mut out = Vec::with_capacity(task.n);
    for i in 0..task.n {
        let target = i % task.n_classes;
        loop {
            if attempts == budget {
                return Err(Error::InvalidArgument(format!(
                    "class balancing exhausted {budget} attempts after {i} samples"
                )));
            }
            attempts += 1;
            let len = rng.gen_range(lo..=hi);
            let ids: Vec<u32> = (0..len).map(|_| rng.gen_range(0..task.vocab as u32)).collect();
            if count_label(&ids, task.n_classes) == target {
                out.push(SupervisedSample {
                    sequence: Sequence::Tokens { vocab: task.vocab, ids },
                    static_features: Vec::new(),
                    label: target,
                });
                break;
            }
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Logged data plus the ground-truth labels, which are kept apart and only
/// used for accuracy scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertedData {
    pub dataset: LoggedDataset,
    pub labels: Vec<usize>,
}

/// Draws an index from `probs` by inversion; never returns a zero-probability entry.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

pub fn convert_to_bandit(
    supervised: &[SupervisedSample],
    featurizer: &Featurizer,
    logging_policy: &SoftmaxPolicy,
    seed: u64,
) -> Result<ConvertedData> {
    if featurizer.output_dim() != logging_policy.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: logging_policy.input_dim(),
            actual: featurizer.output_dim(),
        });
    }
    let mut rng = seeded_rng(seed);
    let mut samples = Vec::with_capacity(supervised.len());
    let mut labels = Vec::with_capacity(supervised.len());
    for (i, s) in supervised.iter().enumerate() {
        let features = featurizer.featurize(&s.sequence, &s.static_features)?;
        let probs = logging_policy.action_distribution(&features)?;
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("logging policy output at sample {}", i + 1)));
        }
        let action = sample_index(&probs, rng.gen::<f64>());
        samples.push(LoggedSample {
            features,
            action,
            loss: if action == s.label { 0.0 } else { 1.0 },
            logged_propensity: Some(probs[action]),
            group_id: Some(i.to_string()),
        });
        labels.push(s.label);
    }
    let dataset = LoggedDataset::new(samples, logging_policy.n_actions())?;
    Ok(ConvertedData { dataset, labels })
}

/// Group-aware split into (train, test) index lists. Samples without a
/// group id form singleton groups.
pub fn group_split_indices(dataset: &LoggedDataset, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let keys: Vec<Option<&str>> = dataset.samples().iter().map(|s| s.group_id.as_deref()).collect();
    split_keys(&keys, test_fraction, seed)
}

/// Splits positions by group key; `None` keys are singleton groups.
pub(crate) fn split_keys(keys: &[Option<&str>], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut group_of = Vec::with_capacity(keys.len());
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut n_groups = 0usize;
    for key in keys {
        let g = match key {
            Some(id) => *index.entry(id).or_insert_with(|| {
                n_groups += 1;
                n_groups - 1
            }),
            None => {
                n_groups += 1;
                n_groups - 1
            }
        };
        group_of.push(g);
    }
    if n_groups < 2 {
        return Err(Error::InvalidData(
            "cannot split: every sample belongs to a single group".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n_groups).collect();
    order.shuffle(&mut seeded_rng(seed));
    let n_test = ((test_fraction * n_groups as f64).round() as usize).clamp(1, n_groups - 1);
    let mut is_test = vec![false; n_groups];
    for &g in &order[..n_test] {
        is_test[g] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, &g) in group_of.iter().enumerate() {
        if is_test[g] {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    Ok((train, test))
}

pub fn group_split(dataset: &LoggedDataset, test_fraction: f64, seed: u64) -> Result<(LoggedDataset, LoggedDataset)> {
    let (train, test) = group_split_indices(dataset, test_fraction, seed)?;
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}

/// One (context, action) outcome with its exact probability under the
/// environment and logging policy.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub context: usize,
    pub sample: LoggedSample,
    pub weight: f64,
}

const MAX_PAIRS: usize = 10_000;

pub fn enumerate_logged_outcomes(env: &ToyEnvironment, logging_policy: &SoftmaxPolicy) -> Result<Vec<WeightedSample>> {
    let pairs = env.n_contexts() * env.n_actions();
    if pairs > MAX_PAIRS {
        return Err(Error::InvalidArgument(format!(
            "{pairs} context-action pairs exceed the enumeration limit of {MAX_PAIRS}"
        )));
    }
    if logging_policy.n_actions() != env.n_actions() {
        return Err(Error::DimensionMismatch {
            expected: env.n_actions(),
            actual: logging_policy.n_actions(),
        });
    }
    let mut out = Vec::with_capacity(pairs);
    for c in 0..env.n_contexts() {
        let px = env.context_probs()[c];
        if px == 0.0 {
            continue;
        }
        let probs = logging_policy.action_distribution(env.context_features(c))?;
        for (a, &pa) in probs.iter().enumerate() {
            let weight = px * pa;
            if weight < 1e-300 {
                return Err(Error::NonFinite(format!(
                    "outcome weight underflow at context {c}, action {a} ({weight:e})"
                )));
            }
            out.push(WeightedSample {
                context: c,
                sample: LoggedSample {
                    features: env.context_features(c).to_vec(),
                    action: a,
                    loss: env.loss(c, a),
                    logged_propensity: Some(pa),
                    group_id: None,
                },
                weight,
            });
        }
    }
    Ok(out)
}
