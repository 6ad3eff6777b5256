//! Minimization of the lambda-translated IPS objective and the etIPS driver:
//! fit a propensity model, floor its estimates, train one candidate per
//! lambda and keep the candidate with the lowest self-normalized risk.

use rand::seq::{index::sample, SliceRandom};

use crate::data::{group_split_indices, LoggedDataset, LoggedSample};
use crate::error::{Error, Result};
use crate::estimators::{importance_ratios, snips_risk};
use crate::numeric::{derive_seed, pairwise_mean, seeded_rng};
use crate::policy::{
    estimate_propensities, sgd_epoch, softmax, train_supervised, Activations, Architecture, Network,
    PropensityEstimate, SgdSettings, SoftmaxPolicy, SupervisedFit,
};

/// Where the outer minimization measures TMF and SNIPS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    TrainingSet,
    /// Hold out this fraction of the groups; candidates train on the rest.
    HeldOut {
        fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Grid in units of the loss range: 0 maps to the smallest observed
    /// loss and 1 to the largest.
    pub lambda_grid: Vec<f64>,
    pub propensity_floor: f64,
    pub validation_fraction: f64,
    pub selection: Selection,
}

pub fn default_lambda_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            lambda_grid: default_lambda_grid(),
            propensity_floor: 1e-3,
            validation_fraction: 0.1,
            selection: Selection::TrainingSet,
        }
    }
}

impl TrainConfig {
    pub fn sgd(&self) -> SgdSettings {
        SgdSettings {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
        }
    }

    pub fn validate_optimizer(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction {} outside [0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_optimizer()?;
        if let Some(g) = self.lambda_grid.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "lambda grid value {g} outside the open interval (0, 1)"
            )));
        }
        if !(self.propensity_floor > 0.0 && self.propensity_floor <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "propensity floor {} outside (0, 1]",
                self.propensity_floor
            )));
        }
        if let Selection::HeldOut { fraction } = self.selection {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "selection hold-out fraction {fraction} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("lambda grid `{spec}` is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Maps a grid value in (0, 1) onto the loss range.
pub fn map_lambda(grid_value: f64, loss_range: (f64, f64)) -> f64 {
    let (lo, hi) = loss_range;
    if hi > lo {
        lo + grid_value * (hi - lo)
    } else {
        grid_value
    }
}

/// One lambda candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub lambda: f64,
    pub policy: SoftmaxPolicy,
    /// TMF of the final policy on the selection data.
    pub s: f64,
    /// SNIPS risk on the selection data; `None` when `s == 0`.
    pub snips: Option<f64>,
    /// Excluded from the outer minimization (zero overlap).
    pub flagged: bool,
    /// Mean training objective per epoch.
    pub loss_trace: Vec<f64>,
}

fn check_batch(samples: &[&LoggedSample], propensities: &[f64], policy: &SoftmaxPolicy) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidData("empty batch".into()));
    }
    if samples.len() != propensities.len() {
        return Err(Error::LengthMismatch {
            what: "propensities",
            expected: samples.len(),
            actual: propensities.len(),
        });
    }
    if let Some((i, &p)) = propensities.iter().enumerate().find(|(_, p)| p.is_nan() || **p <= 0.0) {
        return Err(Error::NonPositivePropensity { index: i, value: p });
    }
    if let Some(s) = samples.iter().find(|s| s.action >= policy.n_actions()) {
        return Err(Error::InvalidData(format!("action {} outside policy range", s.action)));
    }
    Ok(())
}

/// Adds the gradient of `scale * c * pi(a|x)` into `grad`; returns `pi(a|x)`.
fn accumulate_prob_gradient(
    net: &Network,
    x: &[f64],
    action: usize,
    c: f64,
    scale: f64,
    act: &mut Activations,
    grad: &mut [f64],
) -> f64 {
    net.forward_into(x, act);
    let p = softmax(&act.logits);
    let pa = p[action];
    let dz: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| c * pa * (if k == action { 1.0 } else { 0.0 } - pk))
        .collect();
    net.backward(x, act, &dz, scale, grad);
    pa
}

/// Batch mean of `(delta_i - lambda) pi(a_i|x_i) / p_i` and its exact
/// gradient with respect to the policy parameters.
pub fn tips_objective_and_gradient(
    policy: &SoftmaxPolicy,
    samples: &[&LoggedSample],
    propensities: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_batch(samples, propensities, policy)?;
    let net = policy
        .network()
        .ok_or_else(|| Error::InvalidArgument("a point-mass policy has no parameters".into()))?;
    let scale = 1.0 / samples.len() as f64;
    let mut grad = vec![0.0; net.params().len()];
    let mut act = Activations::default();
    let mut terms = Vec::with_capacity(samples.len());
    for (s, &p) in samples.iter().zip(propensities) {
        let c = (s.loss - lambda) / p;
        let pa = accumulate_prob_gradient(net, &s.features, s.action, c, scale, &mut act, &mut grad);
        terms.push(c * pa);
    }
    let obj = pairwise_mean(&terms);
    if !obj.is_finite() {
        return Err(Error::NonFinite("translated IPS objective".into()));
    }
    Ok((obj, grad))
}

fn tmf_and_snips(policy: &SoftmaxPolicy, dataset: &LoggedDataset, propensities: &[f64]) -> Result<(f64, Option<f64>)> {
    let probs = policy.logged_action_probabilities(dataset)?;
    let s = pairwise_mean(&importance_ratios(dataset, &probs, propensities)?);
    if s == 0.0 {
        return Ok((0.0, None));
    }
    Ok((s, Some(snips_risk(dataset, &probs, propensities)?.value)))
}

/// Momentum gradient descent on the translated IPS objective from the
/// seeded initialization; `s` and SNIPS are measured on the full dataset.
pub fn train_tips(
    dataset: &LoggedDataset,
    propensities: &[f64],
    lambda: f64,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<TrainRun> {
    train_tips_with_selection(dataset, propensities, dataset, propensities, lambda, arch, config)
}

fn train_tips_with_selection(
    dataset: &LoggedDataset,
    propensities: &[f64],
    select_data: &LoggedDataset,
    select_props: &[f64],
    lambda: f64,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<TrainRun> {
    config.validate_optimizer()?;
    if propensities.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            what: "propensities",
            expected: dataset.len(),
            actual: propensities.len(),
        });
    }
    if let Some((i, &p)) = propensities.iter().enumerate().find(|(_, p)| p.is_nan() || **p <= 0.0) {
        return Err(Error::NonPositivePropensity { index: i, value: p });
    }
    let mut rng = seeded_rng(config.seed);
    let mut net = Network::random(dataset.feature_dim(), arch, dataset.n_actions(), &mut rng);
    let mut velocity = vec![0.0; net.params().len()];
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let samples = dataset.samples();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let obj = sgd_epoch(&mut net, &order, config.sgd(), &mut velocity, |n, batch, grad| {
            let scale = 1.0 / batch.len() as f64;
            let mut act = Activations::default();
            let mut total = 0.0;
            for &i in batch {
                let s = &samples[i];
                let c = (s.loss - lambda) / propensities[i];
                total += c * accumulate_prob_gradient(n, &s.features, s.action, c, scale, &mut act, grad);
            }
            Ok(total * scale)
        })?;
        if !obj.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        trace.push(obj);
    }
    let policy = SoftmaxPolicy::from_network(net);
    let (s, snips) = tmf_and_snips(&policy, select_data, select_props)?;
    Ok(TrainRun {
        lambda,
        policy,
        s,
        snips,
        flagged: snips.is_none(),
        loss_trace: trace,
    })
}

/// All candidates of a lambda grid plus the index of the winner.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub runs: Vec<TrainRun>,
    pub best: usize,
}

impl GridOutcome {
    pub fn best_run(&self) -> &TrainRun {
        &self.runs[self.best]
    }

    pub fn into_policy(self) -> SoftmaxPolicy {
        self.runs.into_iter().nth(self.best).unwrap().policy
    }
}

/// Lowest SNIPS among unflagged runs, ties to the earliest grid entry.
pub fn select_best(runs: &[TrainRun]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, r) in runs.iter().enumerate() {
        if let (false, Some(v)) = (r.flagged, r.snips) {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((j, v));
            }
        }
    }
    best.map(|(j, _)| j).ok_or(Error::AllCandidatesFlagged(runs.len()))
}

/// Trains one candidate per grid value (seeded by mixing the base seed with
/// the grid index) and selects by SNIPS.
pub fn tips_grid_search(
    dataset: &LoggedDataset,
    propensities: &[f64],
    arch: Architecture,
    config: &TrainConfig,
) -> Result<GridOutcome> {
    config.validate()?;
    if config.lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    let range = dataset.loss_range();
    let split = match config.selection {
        Selection::TrainingSet => None,
        Selection::HeldOut { fraction } => {
            let (tr, ho) = group_split_indices(dataset, fraction, derive_seed(config.seed, u64::MAX))?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| propensities[i]).collect::<Vec<_>>();
            Some((dataset.subset(&tr)?, pick(&tr), dataset.subset(&ho)?, pick(&ho)))
        }
    };
    let mut runs = Vec::with_capacity(config.lambda_grid.len());
    for (j, &g) in config.lambda_grid.iter().enumerate() {
        let cfg = TrainConfig {
            seed: derive_seed(config.seed, j as u64),
            ..config.clone()
        };
        let lambda = map_lambda(g, range);
        let run = match &split {
            None => train_tips(dataset, propensities, lambda, arch, &cfg)?,
            Some((tr, tr_p, ho, ho_p)) => train_tips_with_selection(tr, tr_p, ho, ho_p, lambda, arch, &cfg)?,
        };
        runs.push(run);
    }
    let best = select_best(&runs)?;
    Ok(GridOutcome { runs, best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtipsOutcome {
    pub policy: SoftmaxPolicy,
    pub grid: GridOutcome,
    pub propensity_fit: SupervisedFit,
    pub propensities: PropensityEstimate,
}

/// Full etIPS: propensity model on `propensity_inputs` (features to logged
/// actions), floored estimates on `dataset`, then the lambda grid.
pub fn etips_train(
    dataset: &LoggedDataset,
    propensity_inputs: &LoggedDataset,
    arch: Architecture,
    propensity_arch: Architecture,
    config: &TrainConfig,
) -> Result<EtipsOutcome> {
    config.validate()?;
    if config.lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    if propensity_inputs.feature_dim() != dataset.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.feature_dim(),
            actual: propensity_inputs.feature_dim(),
        });
    }
    let propensity_fit = fit_propensity_model(propensity_inputs, dataset.n_actions(), propensity_arch, config)?;
    let propensities = estimate_propensities(&propensity_fit.policy, dataset, config.propensity_floor)?;
    let grid = tips_grid_search(dataset, &propensities.values, arch, config)?;
    Ok(EtipsOutcome {
        policy: grid.best_run().policy.clone(),
        grid,
        propensity_fit,
        propensities,
    })
}

/// Cross-entropy classifier from features to logged actions.
pub fn fit_propensity_model(
    data: &LoggedDataset,
    n_actions: usize,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<SupervisedFit> {
    let inputs = data.features();
    let targets = data.actions();
    let groups: Vec<Option<&str>> = data.samples().iter().map(|s| s.group_id.as_deref()).collect();
    let cfg = TrainConfig {
        seed: derive_seed(config.seed, u64::MAX - 1),
        ..config.clone()
    };
    train_supervised(&inputs, &targets, Some(&groups), n_actions, arch, &cfg)
}

/// A scalar function with an analytic gradient.
pub trait DifferentiableObjective {
    fn params(&self) -> Vec<f64>;
    fn value_at(&self, params: &[f64]) -> Result<f64>;
    fn gradient_at(&self, params: &[f64]) -> Result<Vec<f64>>;
}

/// The translated IPS objective of a fixed batch.
pub struct TipsObjective<'a> {
    pub policy: SoftmaxPolicy,
    pub samples: Vec<&'a LoggedSample>,
    pub propensities: Vec<f64>,
    pub lambda: f64,
}

impl TipsObjective<'_> {
    fn with_params(&self, params: &[f64]) -> Result<SoftmaxPolicy> {
        let net = self
            .policy
            .network()
            .ok_or_else(|| Error::InvalidArgument("a point-mass policy has no parameters".into()))?;
        Ok(SoftmaxPolicy::from_network(Network::from_params(
            net.input_dim(),
            net.arch(),
            net.n_out(),
            params.to_vec(),
        )?))
    }
}

impl DifferentiableObjective for TipsObjective<'_> {
    fn params(&self) -> Vec<f64> {
        self.policy.network().map(|n| n.params().to_vec()).unwrap_or_default()
    }

    fn value_at(&self, params: &[f64]) -> Result<f64> {
        tips_objective_and_gradient(
            &self.with_params(params)?,
            &self.samples,
            &self.propensities,
            self.lambda,
        )
        .map(|(v, _)| v)
    }

    fn gradient_at(&self, params: &[f64]) -> Result<Vec<f64>> {
        tips_objective_and_gradient(
            &self.with_params(params)?,
            &self.samples,
            &self.propensities,
            self.lambda,
        )
        .map(|(_, g)| g)
    }
}

/// `0.5 * ||w||^2`, whose gradient is `w`.
pub struct HalfSquaredNorm(pub Vec<f64>);

impl DifferentiableObjective for HalfSquaredNorm {
    fn params(&self) -> Vec<f64> {
        self.0.clone()
    }

    fn value_at(&self, params: &[f64]) -> Result<f64> {
        Ok(0.5 * params.iter().map(|w| w * w).sum::<f64>())
    }

    fn gradient_at(&self, params: &[f64]) -> Result<Vec<f64>> {
        Ok(params.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub warning: Option<String>,
}

pub const FD_SUBSET_THRESHOLD: usize = 500;
pub const FD_SUBSET_SIZE: usize = 50;
/// Denominator floor of the relative error, so coordinates whose true
/// derivative is ~0 are judged by absolute error.
pub const FD_DENOMINATOR_FLOOR: f64 = 1e-6;

/// Central differences against the analytic gradient. Every coordinate is
/// checked, or a seeded random subset of `FD_SUBSET_SIZE` coordinates
/// when there are more than `FD_SUBSET_THRESHOLD`.
pub fn finite_difference_check(objective: &dyn DifferentiableObjective, step: f64, seed: u64) -> Result<FdReport> {
    let warning = (!(1e-8..=1e-3).contains(&step)).then(|| {
        format!("step {step:e} outside [1e-8, 1e-3]; differences are dominated by cancellation or truncation")
    });
    let w = objective.params();
    let grad = objective.gradient_at(&w)?;
    let coords: Vec<usize> = if w.len() > FD_SUBSET_THRESHOLD {
        let mut idx = sample(&mut seeded_rng(seed), w.len(), FD_SUBSET_SIZE).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..w.len()).collect()
    };
    let mut worst: f64 = 0.0;
    let mut probe = w.clone();
    for &i in &coords {
        probe[i] = w[i] + step;
        let plus = objective.value_at(&probe)?;
        probe[i] = w[i] - step;
        let minus = objective.value_at(&probe)?;
        probe[i] = w[i];
        let fd = (plus - minus) / (2.0 * step);
        let denom = fd.abs().max(grad[i].abs()).max(FD_DENOMINATOR_FLOOR);
        let rel = (fd - grad[i]).abs() / denom;
        worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
    }
    Ok(FdReport {
        max_rel_error: worst,
        checked: coords.len(),
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: Vec<f64>, action: usize, loss: f64) -> LoggedSample {
        LoggedSample {
            features: x,
            action,
            loss,
            logged_propensity: None,
            group_id: None,
        }
    }

    #[test]
    fn objective_vanishes_when_loss_equals_lambda() {
        let s = [sample(vec![1.0, -1.0], 0, 0.3), sample(vec![0.5, 2.0], 1, 0.3)];
        let refs: Vec<&LoggedSample> = s.iter().collect();
        let policy = SoftmaxPolicy::random(2, Architecture::Hidden(3), 2, 1);
        let (obj, grad) = tips_objective_and_gradient(&policy, &refs, &[0.5, 0.2], 0.3).unwrap();
        assert_eq!(obj, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn single_sample_closed_form() {
        let s = sample(vec![1.0], 1, 1.0);
        let policy = SoftmaxPolicy::zeros(1, Architecture::Linear, 2);
        let (obj, _) = tips_objective_and_gradient(&policy, &[&s], &[0.25], 0.5).unwrap();
        assert_eq!(obj, (1.0 - 0.5) * 0.5 / 0.25);
    }

    #[test]
    fn quadratic_surrogate_is_exact() {
        let r = finite_difference_check(&HalfSquaredNorm(vec![0.3, -1.2, 4.0]), 1e-5, 0).unwrap();
        assert!(r.max_rel_error < 1e-8, "{}", r.max_rel_error);
        assert!(r.warning.is_none());
        let r = finite_difference_check(&HalfSquaredNorm(vec![0.3]), 1e-12, 0).unwrap();
        assert!(r.warning.is_some());
    }

    #[test]
    fn large_models_check_a_subset() {
        let r = finite_difference_check(&HalfSquaredNorm(vec![0.1; 800]), 1e-5, 3).unwrap();
        assert_eq!(r.checked, FD_SUBSET_SIZE);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_lambda_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g.len(), 9);
        assert!((g[8] - 0.9).abs() < 1e-12);
        assert!(parse_lambda_grid("0.1:0.9").is_err());
        assert!(parse_lambda_grid("0.5:0.1:0.1").is_err());
        assert_eq!(map_lambda(0.5, (0.0, 1.0)), 0.5);
        assert_eq!(map_lambda(0.5, (-1.0, 3.0)), 1.0);
    }

    #[test]
    fn config_rejects_grid_on_boundary() {
        let cfg = TrainConfig {
            lambda_grid: vec![0.0, 0.5],
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    fn toy_dataset() -> LoggedDataset {
        let samples = (0..40)
            .map(|i| {
                let x = if i % 2 == 0 { 1.0 } else { -1.0 };
                let a = (i / 2) % 2;
                let loss = if (x > 0.0) == (a == 0) { 0.0 } else { 1.0 };
                LoggedSample {
                    features: vec![x],
                    action: a,
                    loss,
                    logged_propensity: Some(0.5),
                    group_id: Some(i.to_string()),
                }
            })
            .collect();
        LoggedDataset::new(samples, 2).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let ds = toy_dataset();
        let cfg = TrainConfig {
            epochs: 0,
            seed: 9,
            ..TrainConfig::default()
        };
        let run = train_tips(&ds, &[0.5; 40], 0.5, Architecture::Linear, &cfg).unwrap();
        assert_eq!(run.policy, SoftmaxPolicy::random(1, Architecture::Linear, 2, 9));
        assert!(run.loss_trace.is_empty());
        assert!(run.s > 0.0 && run.snips.is_some());
    }

    #[test]
    fn grid_winner_has_min_snips_and_is_deterministic() {
        let ds = toy_dataset();
        let cfg = TrainConfig {
            epochs: 5,
            lambda_grid: vec![0.2, 0.5, 0.8],
            ..TrainConfig::default()
        };
        let a = tips_grid_search(&ds, &[0.5; 40], Architecture::Linear, &cfg).unwrap();
        let b = tips_grid_search(&ds, &[0.5; 40], Architecture::Linear, &cfg).unwrap();
        assert_eq!(a, b);
        let best = a.best_run().snips.unwrap();
        assert!(a.runs.iter().all(|r| r.snips.unwrap() >= best));
        let held = TrainConfig {
            selection: Selection::HeldOut { fraction: 0.25 },
            ..cfg
        };
        assert_eq!(
            tips_grid_search(&ds, &[0.5; 40], Architecture::Linear, &held)
                .unwrap()
                .runs
                .len(),
            3
        );
    }

    #[test]
    fn all_flagged_is_an_error() {
        let run = |flagged| TrainRun {
            lambda: 0.5,
            policy: SoftmaxPolicy::zeros(1, Architecture::Linear, 2),
            s: 0.0,
            snips: None,
            flagged,
            loss_trace: vec![],
        };
        assert!(matches!(
            select_best(&[run(true), run(true)]),
            Err(Error::AllCandidatesFlagged(2))
        ));
    }
}
