//! Offline evaluation reports on logged data and the supervised-to-bandit
//! simulation study.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::data::{convert_to_bandit, generate_counting_task, CountingTask, LoggedDataset, SupervisedSample};
use crate::document::{Document, NOT_APPLICABLE};
use crate::error::{Error, Result};
use crate::estimators::{accuracy_on_features, atenp, dr_risk, ips_risk, EstimateReport};
use crate::numeric::{derive_seed, fmt_f64, mean_and_std, seeded_rng};
use crate::policy::{
    baseline_policy, estimate_propensities, train_logging_policy, train_loss_model, train_supervised, ActionPolicy,
    Architecture, BaselineKind, DirectMethodPolicy, Featurizer, FeaturizerMode, LoggingPolicyConfig, LossPredictor,
    SoftmaxPolicy,
};
use crate::training::{fit_propensity_model, tips_grid_search, train_tips, TrainConfig, TrainRun};

pub const TMF_HEALTHY: f64 = 0.5;
pub const TMF_OVERFIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Healthy,
    Suspicious,
    Overfit,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Healthy => "healthy",
            Verdict::Suspicious => "suspicious",
            Verdict::Overfit => "overfit",
        }
    }
}

/// Anything carrying a treatment matching factor.
pub trait TmfSource {
    fn tmf_value(&self) -> Option<f64>;
}

impl TmfSource for f64 {
    fn tmf_value(&self) -> Option<f64> {
        Some(*self)
    }
}

impl TmfSource for TrainRun {
    fn tmf_value(&self) -> Option<f64> {
        Some(self.s)
    }
}

impl TmfSource for EstimateReport {
    fn tmf_value(&self) -> Option<f64> {
        self.tmf
    }
}

pub fn verdict_for(tmf: f64) -> Verdict {
    if tmf >= TMF_HEALTHY {
        Verdict::Healthy
    } else if tmf >= TMF_OVERFIT {
        Verdict::Suspicious
    } else {
        Verdict::Overfit
    }
}

pub fn diagnose_overfit(source: &dyn TmfSource) -> Result<Verdict> {
    source
        .tmf_value()
        .map(verdict_for)
        .ok_or_else(|| Error::InvalidArgument("no TMF available to diagnose".into()))
}

/// One report cell: a number or an explicit marker.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value(f64),
    NotApplicable,
    EmptyGroup { group_one: usize, group_two: usize },
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Value(v) => fmt_f64(*v),
            Cell::NotApplicable => NOT_APPLICABLE.into(),
            Cell::EmptyGroup { group_one, group_two } => format!("empty-group({group_one}/{group_two})"),
        }
    }

    fn short(&self) -> String {
        match self {
            Cell::Value(v) => format!("{v:.4}"),
            other => other.render(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRow {
    pub name: String,
    pub atenp: Cell,
    pub group_one_size: Option<usize>,
    pub group_two_size: Option<usize>,
    pub ips: Cell,
    pub dr: Cell,
    pub tmf: Cell,
    pub clipped_count: usize,
}

impl PolicyRow {
    pub fn verdict(&self) -> Option<Verdict> {
        self.tmf.value().map(verdict_for)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub m: usize,
    pub dataset_digest: String,
    pub rows: Vec<PolicyRow>,
}

/// A policy to evaluate under a display name.
pub struct NamedPolicy<'a> {
    pub name: String,
    pub policy: &'a dyn ActionPolicy,
}

impl<'a> NamedPolicy<'a> {
    pub fn new(name: impl Into<String>, policy: &'a dyn ActionPolicy) -> Self {
        Self {
            name: name.into(),
            policy,
        }
    }
}

/// ATENP, IPS and DR (both with floored estimated propensities) and TMF
/// for each policy. Policies without probabilities get not-applicable
/// markers; an empty ATENP group becomes a marked cell.
pub fn evaluate_offline(
    test: &LoggedDataset,
    policies: &[NamedPolicy<'_>],
    propensity_model: &SoftmaxPolicy,
    loss_model: &dyn LossPredictor,
    propensity_floor: f64,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::InvalidData("empty test set".into()));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(p) = policies.iter().find(|p| !seen.insert(p.name.as_str())) {
        return Err(Error::InvalidArgument(format!("policy `{}` listed twice", p.name)));
    }
    let est = estimate_propensities(propensity_model, test, propensity_floor)?;
    let mut rows = Vec::with_capacity(policies.len());
    for named in policies {
        let (atenp_cell, g1, g2) = match atenp(test, named.policy) {
            Ok(r) => (Cell::Value(r.value), r.group_one_size, r.group_two_size),
            Err(Error::EmptyGroup { group_one, group_two }) => (
                Cell::EmptyGroup { group_one, group_two },
                Some(group_one),
                Some(group_two),
            ),
            Err(e) => return Err(e),
        };
        let first = &test.samples()[0].features;
        let (ips, dr, tmf) = if named.policy.distribution(first)?.is_some() {
            let probs = test
                .samples()
                .iter()
                .map(|s| Ok(named.policy.distribution(&s.features)?.unwrap()[s.action]))
                .collect::<Result<Vec<_>>>()?;
            let ips = ips_risk(test, &probs, &est.values)?;
            let dr = dr_risk(test, named.policy, &est.values, loss_model)?;
            (
                Cell::Value(ips.value),
                Cell::Value(dr.value),
                Cell::Value(ips.tmf.unwrap()),
            )
        } else {
            (Cell::NotApplicable, Cell::NotApplicable, Cell::NotApplicable)
        };
        rows.push(PolicyRow {
            name: named.name.clone(),
            atenp: atenp_cell,
            group_one_size: g1,
            group_two_size: g2,
            ips,
            dr,
            tmf,
            clipped_count: est.clipped,
        });
    }
    Ok(EvaluationReport {
        m: test.len(),
        dataset_digest: test.content_digest(),
        rows,
    })
}

impl EvaluationReport {
    pub fn row(&self, name: &str) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Adds `[evaluation]` and one `[row.<name>]` section per policy.
    pub fn write_into(&self, doc: &mut Document, prefix: &str) {
        doc.section(&format!("{prefix}evaluation"))
            .set("m", self.m.to_string())
            .set("dataset_sha256", self.dataset_digest.clone());
        for r in &self.rows {
            let s = doc.section(&format!("{prefix}row.{}", r.name));
            s.set("atenp", r.atenp.render())
                .set("group_one_size", opt_count(r.group_one_size))
                .set("group_two_size", opt_count(r.group_two_size))
                .set("ips", r.ips.render())
                .set("dr", r.dr.render())
                .set("tmf", r.tmf.render())
                .set("clipped", r.clipped_count.to_string())
                .set("verdict", r.verdict().map_or(NOT_APPLICABLE, Verdict::name));
        }
    }

    pub fn render_table(&self) -> String {
        let header = ["policy", "ATENP", "n1", "n2", "IPS", "DR", "TMF", "verdict"];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.atenp.short(),
                    opt_count(r.group_one_size),
                    opt_count(r.group_two_size),
                    r.ips.short(),
                    r.dr.short(),
                    r.tmf.short(),
                    r.verdict().map_or(NOT_APPLICABLE, Verdict::name).to_string(),
                ]
            })
            .collect();
        render_aligned(&header, &body)
    }
}

fn opt_count(v: Option<usize>) -> String {
    v.map_or_else(|| NOT_APPLICABLE.to_string(), |n| n.to_string())
}

pub fn render_aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    let _ = writeln!(
        out,
        "{}",
        "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
    );
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dm,
    Rp,
    Ips,
    Tips,
    Eips,
    Etips,
    Skyline,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Dm,
        Method::Rp,
        Method::Ips,
        Method::Tips,
        Method::Eips,
        Method::Etips,
        Method::Skyline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dm => "dm",
            Method::Rp => "rp",
            Method::Ips => "ips",
            Method::Tips => "tips",
            Method::Eips => "eips",
            Method::Etips => "etips",
            Method::Skyline => "skyline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub task: CountingTask,
    pub methods: Vec<Method>,
    pub folds: usize,
    pub seed: u64,
    pub featurizer_mode: FeaturizerMode,
    /// Scale each feature by its reciprocal standard deviation.
    pub standardize: bool,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub logging: LoggingPolicyConfig,
    pub test_fraction: f64,
    /// Keep the logging-policy subset out of the converted training data.
    pub disjoint_logging_subset: bool,
    /// Also produce the offline report on the converted test split.
    pub offline_report: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            task: CountingTask::default(),
            methods: Method::ALL.to_vec(),
            folds: 5,
            seed: 0,
            featurizer_mode: FeaturizerMode::MeanPool,
            standardize: true,
            arch: Architecture::Hidden(64),
            train: TrainConfig::default(),
            logging: LoggingPolicyConfig::default(),
            test_fraction: 0.2,
            disjoint_logging_subset: true,
            offline_report: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub accuracy: f64,
    /// TMF on the training data for the propensities the method used.
    pub tmf: Option<f64>,
    pub snips: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub seed: u64,
    /// Accuracy of the logging policy on the test split.
    pub logging_accuracy: f64,
    /// Held-out accuracy that placed the logging policy inside the band.
    pub logging_band_accuracy: f64,
    pub logging_epoch: usize,
    pub logged_mean_loss: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Label accuracy of the propensity model on the test split.
    pub propensity_label_accuracy: Option<f64>,
    /// Agreement of the propensity model with logged test actions.
    pub propensity_action_accuracy: Option<f64>,
    pub methods: Vec<MethodResult>,
    pub offline: Option<EvaluationReport>,
}

impl FoldResult {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    pub std: Option<f64>,
    pub tmf_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub folds: Vec<FoldResult>,
    pub summary: Vec<MethodSummary>,
    pub logging_accuracy_mean: f64,
    pub logging_accuracy_std: Option<f64>,
}

impl SimulationReport {
    pub fn summary_for(&self, m: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == m)
    }

    pub fn write_into(&self, doc: &mut Document) {
        let s = doc.section("simulation");
        s.set("folds", self.folds.len().to_string())
            .set_f64("logging_accuracy_mean", self.logging_accuracy_mean)
            .set_opt_f64("logging_accuracy_std", self.logging_accuracy_std);
        for m in &self.summary {
            doc.section(&format!("method.{}", m.method.name()))
                .set_f64("accuracy_mean", m.mean)
                .set_opt_f64("accuracy_std", m.std)
                .set_opt_f64("tmf_mean", m.tmf_mean);
        }
        for (i, f) in self.folds.iter().enumerate() {
            let s = doc.section(&format!("fold.{i}"));
            s.set("seed", f.seed.to_string())
                .set_f64("logging_accuracy", f.logging_accuracy)
                .set_f64("logging_band_accuracy", f.logging_band_accuracy)
                .set("logging_epoch", f.logging_epoch.to_string())
                .set_f64("logged_mean_loss", f.logged_mean_loss)
                .set("n_train", f.n_train.to_string())
                .set("n_test", f.n_test.to_string())
                .set_opt_f64("propensity_label_accuracy", f.propensity_label_accuracy)
                .set_opt_f64("propensity_action_accuracy", f.propensity_action_accuracy);
            for r in &f.methods {
                let key = r.method.name();
                s.set_f64(format!("{key}.accuracy"), r.accuracy)
                    .set_opt_f64(format!("{key}.tmf"), r.tmf)
                    .set_opt_f64(format!("{key}.snips"), r.snips)
                    .set_opt_f64(format!("{key}.lambda"), r.lambda);
            }
            if let Some(off) = &f.offline {
                off.write_into(doc, &format!("fold.{i}."));
            }
        }
    }

    pub fn render_table(&self) -> String {
        let header = ["method", "accuracy", "std", "TMF"];
        let mut rows: Vec<Vec<String>> = vec![vec![
            "logging".into(),
            format!("{:.4}", self.logging_accuracy_mean),
            self.logging_accuracy_std
                .map_or(NOT_APPLICABLE.into(), |s| format!("{s:.4}")),
            NOT_APPLICABLE.into(),
        ]];
        rows.extend(self.summary.iter().map(|m| {
            vec![
                m.method.name().into(),
                format!("{:.4}", m.mean),
                m.std.map_or(NOT_APPLICABLE.into(), |s| format!("{s:.4}")),
                m.tmf_mean.map_or(NOT_APPLICABLE.into(), |s| format!("{s:.4}")),
            ]
        }));
        render_aligned(&header, &rows)
    }
}

pub fn fold_seeds(seed: u64, folds: usize) -> Vec<u64> {
    (0..folds as u64).map(|i| derive_seed(seed, i)).collect()
}

/// Runs `config.folds` independent folds seeded from `config.seed`.
pub fn run_simulation_study(config: &SimulationConfig) -> Result<SimulationReport> {
    if config.folds < 2 {
        return Err(Error::InvalidArgument(
            "a simulation study needs at least 2 folds".into(),
        ));
    }
    run_simulation_with_fold_seeds(config, &fold_seeds(config.seed, config.folds))
}

pub fn run_simulation_with_fold_seeds(config: &SimulationConfig, seeds: &[u64]) -> Result<SimulationReport> {
    let folds = seeds.iter().map(|&s| run_fold(config, s)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(folds, &config.methods))
}

pub fn summarize(folds: Vec<FoldResult>, methods: &[Method]) -> SimulationReport {
    let std_if = |xs: &[f64]| {
        let (m, s) = mean_and_std(xs);
        (m, (xs.len() >= 2).then_some(s))
    };
    let summary = methods
        .iter()
        .map(|&method| {
            let accs: Vec<f64> = folds
                .iter()
                .filter_map(|f| f.method(method))
                .map(|r| r.accuracy)
                .collect();
            let tmfs: Vec<f64> = folds.iter().filter_map(|f| f.method(method)?.tmf).collect();
            let (mean, std) = std_if(&accs);
            MethodSummary {
                method,
                mean,
                std,
                tmf_mean: (!tmfs.is_empty()).then(|| mean_and_std(&tmfs).0),
            }
        })
        .collect();
    let logs: Vec<f64> = folds.iter().map(|f| f.logging_accuracy).collect();
    let (logging_accuracy_mean, logging_accuracy_std) = std_if(&logs);
    SimulationReport {
        folds,
        summary,
        logging_accuracy_mean,
        logging_accuracy_std,
    }
}

fn pick(samples: &[SupervisedSample], idx: &[usize]) -> Vec<SupervisedSample> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

/// One fold: generate data, train the logging policy, convert, train each
/// method and score it on held-out labels.
pub fn run_fold(config: &SimulationConfig, seed: u64) -> Result<FoldResult> {
    config.train.validate()?;
    if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {} outside (0, 1)",
            config.test_fraction
        )));
    }
    let k = config.task.n_classes;
    let data = generate_counting_task(&config.task, derive_seed(seed, 0))?;
    let mut featurizer = Featurizer::new(config.featurizer_mode, config.task.vocab, 0);
    if config.standardize {
        featurizer = featurizer.fit_scale(&data)?;
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut seeded_rng(derive_seed(seed, 1)));
    let n_test = ((config.test_fraction * data.len() as f64).round() as usize).clamp(1, data.len() - 1);
    let test = pick(&data, &order[data.len() - n_test..]);
    let pool = pick(&data, &order[..data.len() - n_test]);

    let logging = train_logging_policy(&pool, &featurizer, k, &config.logging, derive_seed(seed, 2))?;
    let conversion: Vec<SupervisedSample> = if config.disjoint_logging_subset {
        let mut in_subset = vec![false; pool.len()];
        for &i in &logging.subset {
            in_subset[i] = true;
        }
        pool.iter()
            .zip(in_subset)
            .filter(|(_, used)| !used)
            .map(|(s, _)| s.clone())
            .collect()
    } else {
        pool.clone()
    };
    let train = convert_to_bandit(&conversion, &featurizer, &logging.policy, derive_seed(seed, 3))?;
    let test_logged = convert_to_bandit(&test, &featurizer, &logging.policy, derive_seed(seed, 4))?;
    let test_x: Vec<Vec<f64>> = test_logged
        .dataset
        .samples()
        .iter()
        .map(|s| s.features.clone())
        .collect();
    let test_y = &test_logged.labels;
    let ds = &train.dataset;
    let logging_accuracy = accuracy_on_features(&logging.policy, &test_x, test_y)?;
    let train_cfg = TrainConfig {
        seed: derive_seed(seed, 5),
        ..config.train.clone()
    };
    let floor = train_cfg.propensity_floor;
    let true_props: Vec<f64> = ds.logged_propensities()?.into_iter().map(|p| p.max(floor)).collect();

    let needs = |m: Method| config.methods.contains(&m);
    let needs_estimated = needs(Method::Eips) || needs(Method::Etips) || config.offline_report;
    let propensity_model = if needs_estimated {
        Some(fit_propensity_model(ds, k, config.arch, &train_cfg)?.policy)
    } else {
        None
    };
    let est = match &propensity_model {
        Some(pm) => Some(estimate_propensities(pm, ds, floor)?),
        None => None,
    };
    let needs_loss_model = needs(Method::Dm) || config.offline_report;
    let loss_model = if needs_loss_model {
        Some(train_loss_model(ds, config.arch, &train_cfg)?)
    } else {
        None
    };

    let mut methods = Vec::new();
    let mut etips_policy = None;
    let mut tips_policy = None;
    for &method in &config.methods {
        let result = match method {
            Method::Rp => {
                let rp = baseline_policy(BaselineKind::Random, ds)?;
                plain(method, accuracy_on_features(&rp, &test_x, test_y)?)
            }
            Method::Dm => {
                let dm = DirectMethodPolicy {
                    model: loss_model.clone().unwrap(),
                    softened_temperature: None,
                };
                plain(method, accuracy_on_features(&dm, &test_x, test_y)?)
            }
            Method::Skyline => {
                let inputs = ds.features();
                let fit = train_supervised(&inputs, &train.labels, None, k, config.arch, &train_cfg)?;
                plain(method, accuracy_on_features(&fit.policy, &test_x, test_y)?)
            }
            Method::Ips | Method::Eips => {
                let props = if method == Method::Ips {
                    &true_props
                } else {
                    &est.as_ref().unwrap().values
                };
                let run = train_tips(ds, props, 0.0, config.arch, &train_cfg)?;
                from_run(method, &run, accuracy_on_features(&run.policy, &test_x, test_y)?)
            }
            Method::Tips | Method::Etips => {
                let props = if method == Method::Tips {
                    &true_props
                } else {
                    &est.as_ref().unwrap().values
                };
                let grid = tips_grid_search(ds, props, config.arch, &train_cfg)?;
                let run = grid.best_run();
                let r = from_run(method, run, accuracy_on_features(&run.policy, &test_x, test_y)?);
                if method == Method::Etips {
                    etips_policy = Some(run.policy.clone());
                } else {
                    tips_policy = Some(run.policy.clone());
                }
                r
            }
        };
        methods.push(result);
    }

    let (propensity_label_accuracy, propensity_action_accuracy) = match &propensity_model {
        Some(pm) => {
            let actions = test_logged.dataset.actions();
            (
                Some(accuracy_on_features(pm, &test_x, test_y)?),
                Some(accuracy_on_features(pm, &test_x, &actions)?),
            )
        }
        None => (None, None),
    };

    let offline = if config.offline_report {
        let pm = propensity_model.as_ref().unwrap();
        let lm = loss_model.as_ref().unwrap();
        let rp = baseline_policy(BaselineKind::Random, ds)?;
        let mf = baseline_policy(BaselineKind::MostFrequent, ds)?;
        let dm = DirectMethodPolicy {
            model: lm.clone(),
            softened_temperature: None,
        };
        let mut named = vec![
            NamedPolicy::new("propensity", pm as &dyn ActionPolicy),
            NamedPolicy::new("random", &rp),
            NamedPolicy::new("most_frequent", &mf),
            NamedPolicy::new("dm", &dm),
        ];
        if let Some(p) = &tips_policy {
            named.push(NamedPolicy::new("tips", p));
        }
        if let Some(p) = &etips_policy {
            named.push(NamedPolicy::new("etips", p));
        }
        Some(evaluate_offline(&test_logged.dataset, &named, pm, lm, floor)?)
    } else {
        None
    };

    Ok(FoldResult {
        seed,
        logging_accuracy,
        logging_band_accuracy: logging.holdout_accuracy,
        logging_epoch: logging.epoch,
        logged_mean_loss: ds.losses().iter().sum::<f64>() / ds.len() as f64,
        n_train: ds.len(),
        n_test: test.len(),
        propensity_label_accuracy,
        propensity_action_accuracy,
        methods,
        offline,
    })
}

fn plain(method: Method, accuracy: f64) -> MethodResult {
    MethodResult {
        method,
        accuracy,
        tmf: None,
        snips: None,
        lambda: None,
    }
}

fn from_run(method: Method, run: &TrainRun, accuracy: f64) -> MethodResult {
    MethodResult {
        method,
        accuracy,
        tmf: Some(run.s),
        snips: run.snips,
        lambda: Some(run.lambda),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LoggedSample;
    use crate::policy::ConstantLoss;

    #[test]
    fn verdict_thresholds() {
        assert_eq!(diagnose_overfit(&0.926).unwrap(), Verdict::Healthy);
        assert_eq!(diagnose_overfit(&0.0061).unwrap(), Verdict::Overfit);
        assert_eq!(diagnose_overfit(&0.3).unwrap(), Verdict::Suspicious);
        assert_eq!(verdict_for(0.5), Verdict::Healthy);
        assert_eq!(verdict_for(0.1), Verdict::Suspicious);
    }

    fn logged() -> LoggedDataset {
        let samples = (0..6)
            .map(|i| LoggedSample {
                features: vec![if i < 3 { 1.0 } else { -1.0 }],
                action: i % 2,
                loss: (i % 2) as f64,
                logged_propensity: Some(0.5),
                group_id: None,
            })
            .collect();
        LoggedDataset::new(samples, 2).unwrap()
    }

    #[test]
    fn deterministic_rows_are_marked() {
        let ds = logged();
        let uniform = SoftmaxPolicy::zeros(1, Architecture::Linear, 2);
        let mf = SoftmaxPolicy::point_mass(1, 2, 0).unwrap();
        let policies = [
            NamedPolicy::new("random", &uniform),
            NamedPolicy::new("most_frequent", &mf),
        ];
        let r = evaluate_offline(&ds, &policies, &uniform, &ConstantLoss(0.0), 1e-3).unwrap();
        let mf_row = r.row("most_frequent").unwrap();
        assert_eq!(mf_row.ips, Cell::NotApplicable);
        assert_eq!(mf_row.dr, Cell::NotApplicable);
        assert_eq!(mf_row.tmf, Cell::NotApplicable);
        assert_eq!(mf_row.atenp, Cell::Value(-1.0));
        // the uniform policy's greedy action is 0 everywhere as well
        let rp = r.row("random").unwrap();
        assert_eq!(rp.tmf, Cell::Value(1.0));
        assert_eq!(rp.ips, Cell::Value(0.5));
        let mut doc = Document::new("t");
        r.write_into(&mut doc, "");
        assert_eq!(
            doc.require_section("row.most_frequent").unwrap().get("ips"),
            Some(NOT_APPLICABLE)
        );
        assert!(r.render_table().contains("most_frequent"));
    }

    #[test]
    fn empty_group_becomes_marker() {
        let ds = logged();
        let never = SoftmaxPolicy::point_mass(1, 2, 1).unwrap();
        let samples: Vec<LoggedSample> = ds.samples().iter().filter(|s| s.action == 0).cloned().collect();
        let only_zero = LoggedDataset::new(samples, 2).unwrap();
        let uniform = SoftmaxPolicy::zeros(1, Architecture::Linear, 2);
        let r = evaluate_offline(
            &only_zero,
            &[NamedPolicy::new("never", &never)],
            &uniform,
            &ConstantLoss(0.0),
            1e-3,
        )
        .unwrap();
        assert_eq!(
            r.rows[0].atenp,
            Cell::EmptyGroup {
                group_one: 0,
                group_two: 3
            }
        );
    }

    #[test]
    fn duplicate_names_rejected() {
        let ds = logged();
        let u = SoftmaxPolicy::zeros(1, Architecture::Linear, 2);
        let p = [NamedPolicy::new("a", &u), NamedPolicy::new("a", &u)];
        assert!(evaluate_offline(&ds, &p, &u, &ConstantLoss(0.0), 1e-3).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
    }
}
