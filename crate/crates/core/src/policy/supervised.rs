use rand::seq::SliceRandom;

use super::network::{sgd_epoch, sigmoid, softmax, Activations, Architecture, Network, SgdSettings};
use super::{Featurizer, LossModel, SoftmaxPolicy};
use crate::data::{split_keys, LoggedDataset, SupervisedSample};
use crate::error::{Error, Result};
use crate::numeric::{argmax_lowest, derive_seed, seeded_rng, Rng};
use crate::training::TrainConfig;

/// Outcome of cross-entropy training.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedFit {
    pub policy: SoftmaxPolicy,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
    pub loss_trace: Vec<f64>,
}

fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[k] - lse
}

/// Shared loop: momentum SGD on `train`, keeping the parameters with the
/// lowest mean `sample_loss` over `val` (or the final ones when `val` is empty).
fn fit<G, L>(
    mut net: Network,
    train: &[usize],
    val: &[usize],
    config: &TrainConfig,
    rng: &mut Rng,
    sample_grad: G,
    sample_loss: L,
) -> Result<(Network, usize, Vec<f64>)>
where
    G: Fn(&Network, usize, &mut Activations, f64, &mut [f64]) -> f64,
    L: Fn(&Network, usize, &mut Activations) -> f64,
{
    let settings = config.sgd();
    let mut velocity = vec![0.0; net.params().len()];
    let mut order = train.to_vec();
    let val_loss = |net: &Network, act: &mut Activations| {
        val.iter().map(|&i| sample_loss(net, i, act)).sum::<f64>() / val.len() as f64
    };
    let mut act = Activations::default();
    let mut best = (!val.is_empty()).then(|| (val_loss(&net, &mut act), 0usize, net.clone()));
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let loss = sgd_epoch(&mut net, &order, settings, &mut velocity, |n, batch, grad| {
            let scale = 1.0 / batch.len() as f64;
            let mut act = Activations::default();
            let total: f64 = batch.iter().map(|&i| sample_grad(n, i, &mut act, scale, grad)).sum();
            Ok(total * scale)
        })?;
        if !loss.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        trace.push(loss);
        if let Some((best_loss, best_epoch, best_net)) = &mut best {
            let v = val_loss(&net, &mut act);
            if v < *best_loss {
                *best_loss = v;
                *best_epoch = epoch;
                *best_net = net.clone();
            }
        }
    }
    Ok(match best {
        Some((_, epoch, best_net)) => (best_net, epoch, trace),
        None => (net, config.epochs, trace),
    })
}

fn validation_split(
    n: usize,
    groups: Option<&[Option<&str>]>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if fraction <= 0.0 || n < 10 {
        return Ok(((0..n).collect(), Vec::new()));
    }
    let keys: Vec<Option<&str>> = match groups {
        Some(g) => g.to_vec(),
        None => vec![None; n],
    };
    match split_keys(&keys, fraction, seed) {
        Ok(split) => Ok(split),
        Err(_) => Ok(((0..n).collect(), Vec::new())),
    }
}

fn greedy_accuracy(policy: &SoftmaxPolicy, inputs: &[&[f64]], targets: &[usize], idx: &[usize]) -> Result<f64> {
    let mut hits = 0usize;
    for &i in idx {
        if policy.greedy_action(inputs[i])? == targets[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / idx.len() as f64)
}

/// Mean cross-entropy minimization with a group-aware validation split of
/// `config.validation_fraction`; the epoch with the lowest validation
/// cross-entropy is kept.
pub fn train_supervised(
    inputs: &[&[f64]],
    targets: &[usize],
    groups: Option<&[Option<&str>]>,
    n_actions: usize,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<SupervisedFit> {
    config.validate_optimizer()?;
    let n = inputs.len();
    if n == 0 {
        return Err(Error::InvalidData("no training samples".into()));
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            what: "targets",
            expected: n,
            actual: targets.len(),
        });
    }
    let d = inputs[0].len();
    if let Some(x) = inputs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= n_actions) {
        return Err(Error::InvalidData(format!("target {t} outside [0, {n_actions})")));
    }
    let (train, val) = validation_split(n, groups, config.validation_fraction, derive_seed(config.seed, 1))?;
    let mut rng = seeded_rng(config.seed);
    let net = Network::random(d, arch, n_actions, &mut rng);
    let (net, best_epoch, loss_trace) = fit(
        net,
        &train,
        &val,
        config,
        &mut rng,
        |net, i, act, scale, grad| {
            net.forward_into(inputs[i], act);
            let mut dz = softmax(&act.logits);
            let loss = -log_softmax_at(&act.logits, targets[i]);
            dz[targets[i]] -= 1.0;
            net.backward(inputs[i], act, &dz, scale, grad);
            loss
        },
        |net, i, act| {
            net.forward_into(inputs[i], act);
            -log_softmax_at(&act.logits, targets[i])
        },
    )?;
    let policy = SoftmaxPolicy::from_network(net);
    Ok(SupervisedFit {
        train_accuracy: greedy_accuracy(&policy, inputs, targets, &train)?,
        validation_accuracy: if val.is_empty() {
            None
        } else {
            Some(greedy_accuracy(&policy, inputs, targets, &val)?)
        },
        policy,
        best_epoch,
        loss_trace,
    })
}

/// Settings for producing a deliberately imperfect logging policy.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggingPolicyConfig {
    pub subset_fraction: f64,
    pub band: (f64, f64),
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub arch: Architecture,
    /// Largest number of samples outside the subset used to measure accuracy.
    pub holdout_cap: usize,
}

impl Default for LoggingPolicyConfig {
    fn default() -> Self {
        Self {
            subset_fraction: 0.05,
            band: (0.60, 0.72),
            max_epochs: 200,
            learning_rate: 8.0,
            momentum: 0.9,
            batch_size: 64,
            arch: Architecture::Linear,
            holdout_cap: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoggingFit {
    pub policy: SoftmaxPolicy,
    /// Indices into the supervised set used for training.
    pub subset: Vec<usize>,
    pub holdout_accuracy: f64,
    pub epoch: usize,
}

/// Trains on a random subset and returns the first epoch checkpoint whose
/// greedy accuracy on held-out samples lies inside the band.
pub fn train_logging_policy(
    supervised: &[SupervisedSample],
    featurizer: &Featurizer,
    n_actions: usize,
    cfg: &LoggingPolicyConfig,
    seed: u64,
) -> Result<LoggingFit> {
    let (lo, hi) = cfg.band;
    if !(cfg.subset_fraction > 0.0 && cfg.subset_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subset fraction {} outside (0, 1)",
            cfg.subset_fraction
        )));
    }
    if !(1.0 / n_actions as f64 <= lo && lo <= hi && hi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "accuracy band [{lo}, {hi}] must lie within (1/K, 1)"
        )));
    }
    let n = supervised.len();
    let mut rng = seeded_rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_sub = ((cfg.subset_fraction * n as f64).ceil() as usize).max(1);
    if n_sub >= n {
        return Err(Error::InvalidData(
            "supervised set too small for a logging subset".into(),
        ));
    }
    let subset = order[..n_sub].to_vec();
    let holdout = &order[n_sub..(n_sub + cfg.holdout_cap).min(n)];

    let feats = featurizer.featurize_all(supervised)?;
    let labels: Vec<usize> = supervised.iter().map(|s| s.label).collect();
    if let Some(&t) = labels.iter().find(|&&t| t >= n_actions) {
        return Err(Error::InvalidData(format!("label {t} outside [0, {n_actions})")));
    }
    let mut net = Network::random(featurizer.output_dim(), cfg.arch, n_actions, &mut rng);
    let settings = SgdSettings {
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        batch_size: cfg.batch_size,
    };
    let mut velocity = vec![0.0; net.params().len()];
    let mut train_order = subset.clone();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for epoch in 1..=cfg.max_epochs {
        train_order.shuffle(&mut rng);
        let loss = sgd_epoch(&mut net, &train_order, settings, &mut velocity, |n, batch, grad| {
            let scale = 1.0 / batch.len() as f64;
            let mut act = Activations::default();
            let mut total = 0.0;
            for &i in batch {
                n.forward_into(&feats[i], &mut act);
                total -= log_softmax_at(&act.logits, labels[i]);
                let mut dz = softmax(&act.logits);
                dz[labels[i]] -= 1.0;
                n.backward(&feats[i], &act, &dz, scale, grad);
            }
            Ok(total * scale)
        })?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let mut act = Activations::default();
        let hits = holdout
            .iter()
            .filter(|&&i| {
                net.forward_into(&feats[i], &mut act);
                argmax_lowest(&softmax(&act.logits)) == labels[i]
            })
            .count();
        let accuracy = hits as f64 / holdout.len() as f64;
        if accuracy > best.0 {
            best = (accuracy, epoch);
        }
        if (lo..=hi).contains(&accuracy) {
            return Ok(LoggingFit {
                policy: SoftmaxPolicy::from_network(net),
                subset,
                holdout_accuracy: accuracy,
                epoch,
            });
        }
    }
    Err(Error::BandNotReached {
        lo,
        hi,
        epochs: cfg.max_epochs,
        best: best.0,
        best_epoch: best.1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityEstimate {
    pub values: Vec<f64>,
    /// How many raw estimates fell below the floor and were replaced by it.
    pub clipped: usize,
}

/// `max(P_hat(a_i | x_i), floor)` for each logged sample.
pub fn estimate_propensities(model: &SoftmaxPolicy, dataset: &LoggedDataset, floor: f64) -> Result<PropensityEstimate> {
    if model.input_dim() != dataset.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: dataset.feature_dim(),
        });
    }
    let raw = model.logged_action_probabilities(dataset)?;
    let clipped = raw.iter().filter(|&&p| p < floor).count();
    Ok(PropensityEstimate {
        values: raw.into_iter().map(|p| p.max(floor)).collect(),
        clipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Random,
    MostFrequent,
}

pub fn baseline_policy(kind: BaselineKind, dataset: &LoggedDataset) -> Result<SoftmaxPolicy> {
    let (d, k) = (dataset.feature_dim(), dataset.n_actions());
    match kind {
        BaselineKind::Random => Ok(SoftmaxPolicy::zeros(d, Architecture::Linear, k)),
        BaselineKind::MostFrequent => {
            let mut counts = vec![0.0; k];
            for s in dataset.samples() {
                counts[s.action] += 1.0;
            }
            SoftmaxPolicy::point_mass(d, k, argmax_lowest(&counts))
        }
    }
}

/// Fits the outcome regressor by binary cross-entropy on losses rescaled to
/// [0, 1] over the observed loss range.
pub fn train_loss_model(dataset: &LoggedDataset, arch: Architecture, config: &TrainConfig) -> Result<LossModel> {
    config.validate_optimizer()?;
    let k = dataset.n_actions();
    let (lo, hi) = dataset.loss_range();
    let span = hi - lo;
    let inputs: Vec<Vec<f64>> = dataset
        .samples()
        .iter()
        .map(|s| LossModel::joint_input(&s.features, s.action, k))
        .collect();
    let targets: Vec<f64> = dataset
        .samples()
        .iter()
        .map(|s| if span > 0.0 { (s.loss - lo) / span } else { 0.0 })
        .collect();
    let groups: Vec<Option<&str>> = dataset.samples().iter().map(|s| s.group_id.as_deref()).collect();
    let (train, val) = validation_split(
        dataset.len(),
        Some(&groups),
        config.validation_fraction,
        derive_seed(config.seed, 1),
    )?;
    let mut rng = seeded_rng(config.seed);
    let net = Network::random(dataset.feature_dim() + k, arch, 1, &mut rng);
    let bce = |z: f64, t: f64| {
        let softplus = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        softplus - t * z
    };
    let (net, _, _) = fit(
        net,
        &train,
        &val,
        config,
        &mut rng,
        |net, i, act, scale, grad| {
            net.forward_into(&inputs[i], act);
            let z = act.logits[0];
            net.backward(&inputs[i], act, &[sigmoid(z) - targets[i]], scale, grad);
            bce(z, targets[i])
        },
        |net, i, act| {
            net.forward_into(&inputs[i], act);
            bce(act.logits[0], targets[i])
        },
    )?;
    LossModel::new(net, k, lo, hi)
}
