//! Counterfactual risk estimators and diagnostics.
//!
//! Every estimator receives the policy's probability of each logged action
//! and the propensities to divide by; passing logged or estimated
//! propensities is the caller's choice. Sums use pairwise reduction.

use crate::data::{LoggedDataset, SupervisedSample, ToyEnvironment, WeightedSample};
use crate::error::{Error, Result};
use crate::numeric::{pairwise_mean, pairwise_sum};
use crate::policy::{ActionPolicy, Featurizer, LossPredictor, SoftmaxPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimator: String,
    pub value: f64,
    pub tmf: Option<f64>,
    pub m: usize,
    pub group_one_size: Option<usize>,
    pub group_two_size: Option<usize>,
    pub clipped_count: usize,
}

impl EstimateReport {
    fn new(estimator: &str, value: f64, tmf: Option<f64>, m: usize) -> Self {
        Self {
            estimator: estimator.to_string(),
            value,
            tmf,
            m,
            group_one_size: None,
            group_two_size: None,
            clipped_count: 0,
        }
    }

    pub fn with_clipped(mut self, clipped: usize) -> Self {
        self.clipped_count = clipped;
        self
    }
}

/// Importance ratios `pi_i / p_i` after validating lengths and positivity.
pub fn importance_ratios(dataset: &LoggedDataset, policy_probs: &[f64], propensities: &[f64]) -> Result<Vec<f64>> {
    let m = dataset.len();
    if policy_probs.len() != m {
        return Err(Error::LengthMismatch {
            what: "policy probabilities",
            expected: m,
            actual: policy_probs.len(),
        });
    }
    if propensities.len() != m {
        return Err(Error::LengthMismatch {
            what: "propensities",
            expected: m,
            actual: propensities.len(),
        });
    }
    policy_probs
        .iter()
        .zip(propensities)
        .enumerate()
        .map(|(i, (&pi, &p))| {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::NonPositivePropensity { index: i, value: p });
            }
            if !pi.is_finite() {
                return Err(Error::NonFinite(format!("policy probability at sample {i}")));
            }
            Ok(pi / p)
        })
        .collect()
}

fn weighted_mean(dataset: &LoggedDataset, ratios: &[f64], shift: f64) -> f64 {
    let terms: Vec<f64> = dataset
        .samples()
        .iter()
        .zip(ratios)
        .map(|(s, r)| (s.loss - shift) * r)
        .collect();
    pairwise_mean(&terms)
}

/// `(1/m) sum delta_i pi_i / p_i`.
pub fn ips_risk(dataset: &LoggedDataset, policy_probs: &[f64], propensities: &[f64]) -> Result<EstimateReport> {
    let r = importance_ratios(dataset, policy_probs, propensities)?;
    let value = weighted_mean(dataset, &r, 0.0);
    Ok(EstimateReport::new(
        "ips",
        value,
        Some(pairwise_mean(&r)),
        dataset.len(),
    ))
}

/// Treatment matching factor `(1/m) sum pi_i / p_i`.
pub fn tmf(dataset: &LoggedDataset, policy_probs: &[f64], propensities: &[f64]) -> Result<f64> {
    Ok(pairwise_mean(&importance_ratios(dataset, policy_probs, propensities)?))
}

pub fn snips_risk(dataset: &LoggedDataset, policy_probs: &[f64], propensities: &[f64]) -> Result<EstimateReport> {
    let r = importance_ratios(dataset, policy_probs, propensities)?;
    let s = pairwise_mean(&r);
    if s == 0.0 {
        return Err(Error::NoOverlap);
    }
    let ips = weighted_mean(dataset, &r, 0.0);
    Ok(EstimateReport::new("snips", ips / s, Some(s), dataset.len()))
}

/// `(1/m) sum (delta_i - lambda) pi_i / p_i`.
pub fn translated_ips_risk(
    dataset: &LoggedDataset,
    policy_probs: &[f64],
    propensities: &[f64],
    lambda: f64,
) -> Result<EstimateReport> {
    let r = importance_ratios(dataset, policy_probs, propensities)?;
    let value = weighted_mean(dataset, &r, lambda);
    Ok(EstimateReport::new(
        "tips",
        value,
        Some(pairwise_mean(&r)),
        dataset.len(),
    ))
}

/// Doubly robust estimate: model-based risk of `policy` plus the
/// importance-weighted residual on the logged action.
pub fn dr_risk(
    dataset: &LoggedDataset,
    policy: &dyn ActionPolicy,
    propensities: &[f64],
    loss_model: &dyn LossPredictor,
) -> Result<EstimateReport> {
    let k = dataset.n_actions();
    let mut dists = Vec::with_capacity(dataset.len());
    for s in dataset.samples() {
        let d = policy
            .distribution(&s.features)?
            .ok_or_else(|| Error::InvalidArgument("doubly robust estimate needs action probabilities".into()))?;
        if d.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: d.len(),
            });
        }
        dists.push(d);
    }
    let probs: Vec<f64> = dists.iter().zip(dataset.samples()).map(|(d, s)| d[s.action]).collect();
    let r = importance_ratios(dataset, &probs, propensities)?;
    let mut terms = Vec::with_capacity(dataset.len());
    for ((s, d), ri) in dataset.samples().iter().zip(&dists).zip(&r) {
        let preds = (0..k)
            .map(|a| loss_model.predict(&s.features, a))
            .collect::<Result<Vec<_>>>()?;
        let model_part: Vec<f64> = d.iter().zip(&preds).map(|(p, l)| p * l).collect();
        terms.push(pairwise_sum(&model_part) + ri * (s.loss - preds[s.action]));
    }
    Ok(EstimateReport::new(
        "dr",
        pairwise_mean(&terms),
        Some(pairwise_mean(&r)),
        dataset.len(),
    ))
}

/// Mean loss where the logged action equals the policy's greedy action,
/// minus mean loss elsewhere.
pub fn atenp(dataset: &LoggedDataset, policy: &dyn ActionPolicy) -> Result<EstimateReport> {
    let (mut one, mut two) = (Vec::new(), Vec::new());
    for s in dataset.samples() {
        if policy.greedy_action(&s.features)? == s.action {
            one.push(s.loss);
        } else {
            two.push(s.loss);
        }
    }
    if one.is_empty() || two.is_empty() {
        return Err(Error::EmptyGroup {
            group_one: one.len(),
            group_two: two.len(),
        });
    }
    let mut report = EstimateReport::new("atenp", pairwise_mean(&one) - pairwise_mean(&two), None, dataset.len());
    report.group_one_size = Some(one.len());
    report.group_two_size = Some(two.len());
    Ok(report)
}

/// Exact expected loss `sum_x P(x) sum_a pi(a|x) delta(x, a)`.
pub fn true_risk(env: &ToyEnvironment, policy: &SoftmaxPolicy) -> Result<f64> {
    let mut terms = Vec::with_capacity(env.n_contexts());
    for c in 0..env.n_contexts() {
        let d = policy.action_distribution(env.context_features(c))?;
        let inner: Vec<f64> = d.iter().enumerate().map(|(a, p)| p * env.loss(c, a)).collect();
        terms.push(env.context_probs()[c] * pairwise_sum(&inner));
    }
    Ok(pairwise_sum(&terms))
}

/// Exact expectation of a per-sample term under the logging distribution.
fn exact_expectation(
    outcomes: &[WeightedSample],
    policy: &SoftmaxPolicy,
    term: impl Fn(&WeightedSample, f64) -> f64,
) -> Result<f64> {
    let terms = outcomes
        .iter()
        .map(|o| {
            let pi = policy.action_distribution(&o.sample.features)?[o.sample.action];
            Ok(o.weight * term(o, pi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&terms))
}

fn propensity(o: &WeightedSample) -> f64 {
    o.sample
        .logged_propensity
        .expect("enumerated outcomes carry propensities")
}

/// `E[delta pi / p]` over enumerated logged outcomes.
pub fn exact_ips_expectation(outcomes: &[WeightedSample], policy: &SoftmaxPolicy) -> Result<f64> {
    exact_expectation(outcomes, policy, |o, pi| o.sample.loss * pi / propensity(o))
}

/// `E[pi / p]` over enumerated logged outcomes.
pub fn exact_tmf_expectation(outcomes: &[WeightedSample], policy: &SoftmaxPolicy) -> Result<f64> {
    exact_expectation(outcomes, policy, |o, pi| pi / propensity(o))
}

/// Fraction of samples whose greedy action equals the label.
pub fn accuracy(policy: &dyn ActionPolicy, featurizer: &Featurizer, supervised: &[SupervisedSample]) -> Result<f64> {
    if supervised.is_empty() {
        return Err(Error::InvalidData("accuracy of an empty sample set".into()));
    }
    let mut hits = 0usize;
    for s in supervised {
        let x = featurizer.featurize(&s.sequence, &s.static_features)?;
        if policy.greedy_action(&x)? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / supervised.len() as f64)
}

/// Accuracy on already featurized inputs.
pub fn accuracy_on_features(policy: &dyn ActionPolicy, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::InvalidData(
            "accuracy needs equally many features and labels".into(),
        ));
    }
    let mut hits = 0usize;
    for (x, &y) in features.iter().zip(labels) {
        if policy.greedy_action(x)? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}
