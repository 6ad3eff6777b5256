//! Command implementations.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use blbf::data::{
    convert_to_bandit, generate_counting_task, group_split_indices, load_idx_pair, load_logged_csv, write_logged_csv,
    CountingTask, CsvSchema, LoggedDataset, LoggedSample,
};
use blbf::document::{sha256_hex, write_atomic, Document};
use blbf::estimators::accuracy_on_features;
use blbf::evaluation::{
    diagnose_overfit, evaluate_offline, run_simulation_study, Method, NamedPolicy, SimulationConfig,
};
use blbf::numeric::{derive_seed, fmt_f64};
use blbf::policy::{
    baseline_policy, estimate_propensities, train_logging_policy, train_loss_model, ActionPolicy, Architecture,
    BaselineKind, ConstantLoss, DirectMethodPolicy, Featurizer, FeaturizerMode, LoggingPolicyConfig, LossPredictor,
    ModelFile, SoftmaxPolicy, StoredModel,
};
use blbf::training::{fit_propensity_model, parse_lambda_grid, tips_grid_search, train_tips, Selection, TrainConfig};
use blbf::Error;
use serde::Serialize;

use crate::args::{
    ConvertArgs, EvaluateArgs, GenerateArgs, GradcheckArgs, SimulateArgs, TrainArgs, TrainLoggerArgs, TrainOptions,
};
use crate::config::{digest, output_document, resolve};
use crate::error::{usage, CliError, CliResult, EXIT_NUMERIC};
use crate::gradcheck::run_suite;
use crate::supervised_io::{labels_csv, read_supervised, write_supervised, LABELS_FILE, SUPERVISED_FILE};
use crate::Output;

pub const LOGGER_FILE: &str = "logger.model";
pub const POLICY_FILE: &str = "policy.model";
pub const PROPENSITY_FILE: &str = "propensity.model";
pub const LOSS_FILE: &str = "loss.model";
pub const DEFAULT_ARCH: Architecture = Architecture::Hidden(64);

fn require<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| usage(format!("missing --{flag}")))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| {
        Error::Io {
            path: dir.display().to_string(),
            source,
        }
        .into()
    })
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn file_digest(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}

fn parse_arch(value: Option<&str>, default: Architecture) -> CliResult<Architecture> {
    Ok(value.map(Architecture::parse).transpose()?.unwrap_or(default))
}

fn parse_band(value: Option<&str>, default: (f64, f64)) -> CliResult<(f64, f64)> {
    let Some(text) = value else { return Ok(default) };
    let bad = || usage(format!("band `{text}` is not lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_selection(value: Option<&str>) -> CliResult<Selection> {
    match value {
        None | Some("training") => Ok(Selection::TrainingSet),
        Some(text) => {
            let fraction = text
                .strip_prefix("held-out:")
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| usage(format!("selection `{text}` is not `training` or `held-out:F`")))?;
            Ok(Selection::HeldOut { fraction })
        }
    }
}

pub fn train_config(opts: &TrainOptions, seed: u64) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: opts.learning_rate.unwrap_or(d.learning_rate),
        momentum: opts.momentum.unwrap_or(d.momentum),
        batch_size: opts.batch_size.unwrap_or(d.batch_size),
        epochs: opts.epochs.unwrap_or(d.epochs),
        seed,
        lambda_grid: match &opts.lambda_grid {
            Some(g) => parse_lambda_grid(g)?,
            None => d.lambda_grid,
        },
        propensity_floor: opts.propensity_floor.unwrap_or(d.propensity_floor),
        validation_fraction: opts.validation_fraction.unwrap_or(d.validation_fraction),
        selection: parse_selection(opts.selection.as_deref())?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_doc(doc: &Document, path: &Path) -> CliResult<()> {
    Ok(doc.write_atomic(path)?)
}

fn stamp<T: Serialize>(file: &mut ModelFile, command: &str, resolved: &T) {
    file.meta.insert(0, ("config_digest".into(), digest(resolved)));
    file.meta.insert(0, ("command".into(), command.into()));
    file.meta.insert(0, ("version".into(), blbf::VERSION.into()));
}

fn csv_bytes(dataset: &LoggedDataset) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_logged_csv(dataset, &mut buf)?;
    Ok(buf)
}

fn histogram(values: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for v in values {
        counts[v] += 1;
    }
    counts
}

pub fn generate(flags: GenerateArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let out = require(&a.out, "out")?;
    let seed = a.seed.unwrap_or(0);
    let idx = a.idx_images.is_some() || a.idx_labels.is_some();
    if idx && a.task.is_some() {
        return Err(usage(
            "give exactly one data source: --task or --idx-images/--idx-labels",
        ));
    }
    let (source, samples) = if idx {
        let images = require(&a.idx_images, "idx-images")?;
        let labels = require(&a.idx_labels, "idx-labels")?;
        ("idx", load_idx_pair(&images, &labels)?)
    } else {
        match a.task.as_deref().unwrap_or("counting") {
            "counting" => {}
            other => return Err(usage(format!("unknown task `{other}` (expected `counting`)"))),
        }
        let d = CountingTask::default();
        let task = CountingTask {
            n: a.n.unwrap_or(d.n),
            n_classes: a.classes.unwrap_or(d.n_classes),
            vocab: a.vocab.unwrap_or(d.vocab),
            seq_len_mean: a.seq_len_mean.unwrap_or(d.seq_len_mean),
            seq_len_spread: a.seq_len_spread.unwrap_or(d.seq_len_spread),
        };
        task.validate()?;
        ("counting", generate_counting_task(&task, seed)?)
    };
    ensure_dir(&out)?;
    let ids: Vec<String> = (0..samples.len()).map(|i| i.to_string()).collect();
    write_supervised(&out, &ids, &samples)?;
    let k = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    let counts = histogram(samples.iter().map(|s| s.label), k);

    let mut doc = output_document("blbf generate", "generate", &a);
    doc.section("data")
        .set("source", source)
        .set("n", samples.len().to_string())
        .set("n_classes", k.to_string())
        .set("supervised_sha256", file_digest(&out.join(SUPERVISED_FILE))?)
        .set("labels_sha256", file_digest(&out.join(LABELS_FILE))?);
    let h = doc.section("histogram");
    for (c, n) in counts.iter().enumerate() {
        h.set(format!("class.{c}"), n.to_string());
    }
    write_doc(&doc, &out.join("generate.txt"))?;

    let mut o = Output::default();
    o.line(format!(
        "generated {} samples ({source}) in {}",
        samples.len(),
        out.display()
    ));
    for (c, n) in counts.iter().enumerate() {
        o.line(format!("class {c}: {n} ({:.4})", *n as f64 / samples.len() as f64));
    }
    Ok(o)
}

pub fn train_logger(flags: TrainLoggerArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let data = require(&a.data, "data")?;
    let out = require(&a.out, "out")?;
    let seed = a.seed.unwrap_or(0);
    let (ids, samples) = read_supervised(&data)?;
    let k = a
        .classes
        .unwrap_or_else(|| samples.iter().map(|s| s.label).max().unwrap_or(0) + 1);
    let mode = FeaturizerMode::parse(a.featurizer.as_deref().unwrap_or("mean-pool"))?;
    let first = &samples[0];
    let mut featurizer = Featurizer::new(mode, first.sequence.width(), first.static_features.len());
    if a.standardize.unwrap_or(true) {
        featurizer = featurizer.fit_scale(&samples)?;
    }
    let d = LoggingPolicyConfig::default();
    let cfg = LoggingPolicyConfig {
        subset_fraction: a.subset_fraction.unwrap_or(d.subset_fraction),
        band: parse_band(a.band.as_deref(), d.band)?,
        max_epochs: a.max_epochs.unwrap_or(d.max_epochs),
        learning_rate: a.learning_rate.unwrap_or(d.learning_rate),
        momentum: a.momentum.unwrap_or(d.momentum),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        arch: parse_arch(a.logger_arch.as_deref(), d.arch)?,
        holdout_cap: d.holdout_cap,
    };
    let fit = train_logging_policy(&samples, &featurizer, k, &cfg, seed)?;
    ensure_dir(&out)?;
    let subset: Vec<&str> = fit.subset.iter().map(|&i| ids[i].as_str()).collect();
    let mut file = ModelFile::policy(fit.policy, Some(featurizer), seed);
    file.meta.push(("role".into(), "logger".into()));
    file.meta
        .push(("holdout_accuracy".into(), fmt_f64(fit.holdout_accuracy)));
    file.meta.push(("epoch".into(), fit.epoch.to_string()));
    file.meta
        .push(("data_sha256".into(), file_digest(&data.join(SUPERVISED_FILE))?));
    file.meta.push(("subset".into(), subset.join(" ")));
    stamp(&mut file, "train-logger", &a);
    file.write(out.join(LOGGER_FILE))?;

    let mut o = Output::default();
    o.line(format!(
        "logging policy: held-out accuracy {:.4} at epoch {} (band [{}, {}]), trained on {} samples",
        fit.holdout_accuracy,
        fit.epoch,
        cfg.band.0,
        cfg.band.1,
        subset.len()
    ));
    o.line(format!("wrote {}", out.join(LOGGER_FILE).display()));
    Ok(o)
}

pub fn convert(flags: ConvertArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let data = require(&a.data, "data")?;
    let logger_path = require(&a.logger, "logger")?;
    let out = require(&a.out, "out")?;
    let seed = a.seed.unwrap_or(0);
    let (ids, samples) = read_supervised(&data)?;
    let logger_file = ModelFile::read(&logger_path)?;
    let featurizer = logger_file
        .featurizer
        .clone()
        .ok_or_else(|| Error::InvalidData(format!("{} carries no featurizer", logger_path.display())))?;
    let excluded: HashSet<&str> = if a.include_logger_subset.unwrap_or(false) {
        HashSet::new()
    } else {
        logger_file
            .meta
            .iter()
            .find(|(k, _)| k == "subset")
            .map(|(_, v)| v.split_whitespace().collect())
            .unwrap_or_default()
    };
    let logger = logger_file.clone().into_policy()?;
    let keep: Vec<usize> = (0..samples.len())
        .filter(|&i| !excluded.contains(ids[i].as_str()))
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidData("no samples left after removing the logging subset".into()).into());
    }
    let chosen: Vec<_> = keep.iter().map(|&i| samples[i].clone()).collect();
    let conv = convert_to_bandit(&chosen, &featurizer, &logger, derive_seed(seed, 0))?;
    let kept_ids: Vec<String> = keep.iter().map(|&i| ids[i].clone()).collect();
    let relabelled: Vec<LoggedSample> = conv
        .dataset
        .samples()
        .iter()
        .zip(&kept_ids)
        .map(|(s, id)| LoggedSample {
            group_id: Some(id.clone()),
            ..s.clone()
        })
        .collect();
    let k = logger.n_actions();
    let dataset = LoggedDataset::new(relabelled, k)?;
    ensure_dir(&out)?;
    write_atomic(out.join(LABELS_FILE), &labels_csv(&kept_ids, &conv.labels)?)?;

    let test_fraction = a.test_fraction.unwrap_or(0.2);
    let mut files: Vec<(String, LoggedDataset)> = Vec::new();
    if test_fraction == 0.0 {
        files.push(("logged.csv".into(), dataset.clone()));
    } else {
        let (tr, te) = group_split_indices(&dataset, test_fraction, derive_seed(seed, 1))?;
        files.push(("train.csv".into(), dataset.subset(&tr)?));
        files.push(("test.csv".into(), dataset.subset(&te)?));
    }
    for (name, ds) in &files {
        write_atomic(out.join(name), &csv_bytes(ds)?)?;
    }

    let mean_loss = dataset.losses().iter().sum::<f64>() / dataset.len() as f64;
    let feats: Vec<Vec<f64>> = dataset.samples().iter().map(|s| s.features.clone()).collect();
    let greedy_accuracy = accuracy_on_features(&logger, &feats, &conv.labels)?;
    let actions = histogram(dataset.actions().into_iter(), k);
    let mut doc = output_document("blbf convert", "convert", &a);
    doc.section("inputs")
        .set("supervised_sha256", file_digest(&data.join(SUPERVISED_FILE))?)
        .set("logger_sha256", file_digest(&logger_path)?);
    let s = doc.section("conversion");
    s.set("m", dataset.len().to_string())
        .set("excluded_logger_subset", (samples.len() - keep.len()).to_string())
        .set_f64("mean_loss", mean_loss)
        .set_f64("logging_greedy_accuracy", greedy_accuracy)
        .set("dataset_digest", dataset.content_digest());
    for (name, ds) in &files {
        s.set(format!("{name}.rows"), ds.len().to_string());
    }
    let h = doc.section("action_histogram");
    for (c, n) in actions.iter().enumerate() {
        h.set(format!("action.{c}"), n.to_string());
    }
    write_doc(&doc, &out.join("convert.txt"))?;

    let mut o = Output::default();
    o.line(format!(
        "converted {} samples: mean loss {:.4}, logging greedy accuracy {:.4}",
        dataset.len(),
        mean_loss,
        greedy_accuracy
    ));
    for (c, n) in actions.iter().enumerate() {
        o.line(format!("action {c}: {n} ({:.4})", *n as f64 / dataset.len() as f64));
    }
    for (name, ds) in &files {
        o.line(format!("wrote {} ({} rows)", out.join(name).display(), ds.len()));
    }
    Ok(o)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PropensitySource {
    Logged,
    Estimated,
}

impl PropensitySource {
    fn name(self) -> &'static str {
        match self {
            PropensitySource::Logged => "logged",
            PropensitySource::Estimated => "estimated",
        }
    }
}

pub fn train(flags: TrainArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let data = require(&a.data, "data")?;
    let out = require(&a.out, "out")?;
    let seed = a.seed.unwrap_or(0);
    let method = Method::parse(a.method.as_deref().unwrap_or("etips"))?;
    if method == Method::Skyline {
        return Err(usage("skyline needs labels; it is only available in `simulate`"));
    }
    let cfg = train_config(&a.train, seed)?;
    let arch = parse_arch(a.train.arch.as_deref(), DEFAULT_ARCH)?;
    let propensity_arch = parse_arch(a.propensity_arch.as_deref(), arch)?;
    let schema = match a.actions {
        Some(k) => CsvSchema::default().with_n_actions(k),
        None => CsvSchema::default(),
    };
    let ds = load_logged_csv(&data, &schema)?;
    let has_logged = ds.has_logged_propensities();
    let estimated_method = matches!(method, Method::Eips | Method::Etips);
    let source = match a.propensities.as_deref() {
        Some("logged") if estimated_method => {
            return Err(usage(format!("method {} uses estimated propensities", method.name())))
        }
        Some("logged") if !has_logged => {
            return Err(Error::InvalidData(format!(
                "{} has no propensity column; rerun with --propensities estimated",
                data.display()
            ))
            .into())
        }
        Some("logged") => PropensitySource::Logged,
        Some("estimated") => PropensitySource::Estimated,
        Some(other) => {
            return Err(usage(format!(
                "--propensities must be logged or estimated, not `{other}`"
            )))
        }
        None if estimated_method || !has_logged => PropensitySource::Estimated,
        None => PropensitySource::Logged,
    };
    let k = ds.n_actions();
    let floor = cfg.propensity_floor;

    let propensity_fit = fit_propensity_model(&ds, k, propensity_arch, &cfg)?;
    let estimate = estimate_propensities(&propensity_fit.policy, &ds, floor)?;
    let (props, clipped) = match source {
        PropensitySource::Estimated => (estimate.values.clone(), estimate.clipped),
        PropensitySource::Logged => {
            let raw = ds.logged_propensities()?;
            let clipped = raw.iter().filter(|&&p| p < floor).count();
            (raw.into_iter().map(|p| p.max(floor)).collect::<Vec<_>>(), clipped)
        }
    };
    let loss_model = train_loss_model(&ds, arch, &cfg)?;

    let (stored, runs, best) = match method {
        Method::Rp => (
            StoredModel::Policy(baseline_policy(BaselineKind::Random, &ds)?),
            Vec::new(),
            None,
        ),
        Method::Dm => (StoredModel::Loss(loss_model.clone()), Vec::new(), None),
        Method::Ips | Method::Eips => {
            let run = train_tips(&ds, &props, 0.0, arch, &cfg)?;
            (StoredModel::Policy(run.policy.clone()), vec![(None, run)], Some(0))
        }
        Method::Tips | Method::Etips => {
            let grid = tips_grid_search(&ds, &props, arch, &cfg)?;
            let best = grid.best;
            let runs = cfg
                .lambda_grid
                .iter()
                .map(|g| Some(*g))
                .zip(grid.runs)
                .collect::<Vec<_>>();
            (StoredModel::Policy(runs[best].1.policy.clone()), runs, Some(best))
        }
        Method::Skyline => unreachable!(),
    };

    ensure_dir(&out)?;
    let data_digest = file_digest(&data)?;
    let mut policy_file = ModelFile {
        model: stored,
        featurizer: None,
        seed,
        meta: vec![
            ("role".into(), format!("policy.{}", method.name())),
            ("data_sha256".into(), data_digest.clone()),
        ],
    };
    stamp(&mut policy_file, "train", &a);
    policy_file.write(out.join(POLICY_FILE))?;
    let mut pfile = ModelFile::policy(propensity_fit.policy.clone(), None, seed);
    pfile.meta.push(("role".into(), "propensity".into()));
    pfile.meta.push(("data_sha256".into(), data_digest.clone()));
    stamp(&mut pfile, "train", &a);
    pfile.write(out.join(PROPENSITY_FILE))?;
    let mut lfile = ModelFile {
        model: StoredModel::Loss(loss_model),
        featurizer: None,
        seed,
        meta: vec![
            ("role".into(), "loss".into()),
            ("data_sha256".into(), data_digest.clone()),
        ],
    };
    stamp(&mut lfile, "train", &a);
    lfile.write(out.join(LOSS_FILE))?;

    let mut doc = output_document("blbf train audit", "train", &a);
    let s = doc.section("train");
    s.set("method", method.name())
        .set("propensities", source.name())
        .set("data_sha256", data_digest)
        .set("m", ds.len().to_string())
        .set("n_actions", k.to_string())
        .set("arch", arch.name())
        .set("propensity_floor", fmt_f64(floor))
        .set("clipped_propensities", clipped.to_string())
        .set_f64("propensity_train_accuracy", propensity_fit.train_accuracy)
        .set_opt_f64("propensity_validation_accuracy", propensity_fit.validation_accuracy)
        .set("candidates", runs.len().to_string())
        .set("best", best.map_or("n/a".into(), |b: usize| b.to_string()));
    let mut o = Output::default();
    o.line(format!(
        "method {} with {} propensities on {} samples ({} clipped at {})",
        method.name(),
        source.name(),
        ds.len(),
        clipped,
        floor
    ));
    let mut table = Vec::new();
    for (j, (grid_value, run)) in runs.iter().enumerate() {
        let verdict = diagnose_overfit(run)?;
        let r = doc.section(&format!("run.{j}"));
        r.set_opt_f64("grid_value", *grid_value)
            .set_f64("lambda", run.lambda)
            .set_f64("s", run.s)
            .set_opt_f64("snips", run.snips)
            .set("flagged", run.flagged.to_string())
            .set("verdict", verdict.name())
            .set_f64_list("loss_trace", &run.loss_trace);
        table.push(vec![
            j.to_string(),
            format!("{:.4}", run.lambda),
            format!("{:.4}", run.s),
            run.snips.map_or("n/a".into(), |v| format!("{v:.4}")),
            verdict.name().to_string(),
            if Some(j) == best { "*".into() } else { String::new() },
        ]);
        if verdict == blbf::evaluation::Verdict::Overfit {
            o.warn(format!(
                "candidate {j}: TMF {:.4} < 0.1, the policy avoids logged actions (propensity overfitting)",
                run.s
            ));
        }
    }
    write_doc(&doc, &out.join("train.txt"))?;
    if !table.is_empty() {
        o.stdout.push_str(&blbf::evaluation::render_aligned(
            &["run", "lambda", "TMF", "SNIPS", "verdict", "best"],
            &table,
        ));
    }
    o.line(format!("wrote {}", out.display()));
    Ok(o)
}

enum LoadedPolicy {
    Softmax(SoftmaxPolicy),
    Direct(DirectMethodPolicy),
}

impl LoadedPolicy {
    fn as_dyn(&self) -> &dyn ActionPolicy {
        match self {
            LoadedPolicy::Softmax(p) => p,
            LoadedPolicy::Direct(p) => p,
        }
    }
}

pub fn evaluate(flags: EvaluateArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let test_path = require(&a.test, "test")?;
    let pm_path = require(&a.propensity_model, "propensity-model")?;
    let out = require(&a.out, "out")?;
    let floor = a.propensity_floor.unwrap_or(TrainConfig::default().propensity_floor);
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(usage(format!("propensity floor {floor} outside (0, 1]")));
    }
    let propensity_model = ModelFile::read(&pm_path)?.into_policy()?;
    let k = propensity_model.n_actions();
    let schema = CsvSchema::default().with_n_actions(k);
    let test = load_logged_csv(&test_path, &schema)?;
    let train = match &a.train_manifest {
        Some(p) => {
            let train = load_logged_csv(p, &schema)?;
            let train_ids: HashSet<&str> = train.group_ids().collect();
            let mut shared: Vec<&str> = test.group_ids().filter(|g| train_ids.contains(g)).collect();
            shared.sort_unstable();
            shared.dedup();
            if let Some(first) = shared.first() {
                return Err(CliError::GroupLeakage {
                    count: shared.len(),
                    first: first.to_string(),
                });
            }
            Some(train)
        }
        None => None,
    };
    let loss_model: Box<dyn LossPredictor> = match &a.loss_model {
        Some(p) => Box::new(ModelFile::read(p)?.into_loss_model()?),
        None => Box::new(ConstantLoss(0.0)),
    };

    let mut loaded: Vec<(String, LoadedPolicy)> = Vec::new();
    if a.baselines.unwrap_or(true) {
        let base = train.as_ref().unwrap_or(&test);
        loaded.push((
            "random".into(),
            LoadedPolicy::Softmax(baseline_policy(BaselineKind::Random, base)?),
        ));
        loaded.push((
            "most_frequent".into(),
            LoadedPolicy::Softmax(baseline_policy(BaselineKind::MostFrequent, base)?),
        ));
    }
    let mut policy_digests = Vec::new();
    for entry in &a.policy {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| usage(format!("--policy `{entry}` is not name=path")))?;
        let path = PathBuf::from(path);
        policy_digests.push((name.to_string(), file_digest(&path)?));
        let policy = match ModelFile::read(&path)?.model {
            StoredModel::Policy(p) => LoadedPolicy::Softmax(p),
            StoredModel::Loss(m) => LoadedPolicy::Direct(DirectMethodPolicy {
                model: m,
                softened_temperature: a.softened_dm,
            }),
        };
        loaded.push((name.to_string(), policy));
    }
    let mut named = vec![NamedPolicy::new("propensity", &propensity_model as &dyn ActionPolicy)];
    named.extend(loaded.iter().map(|(n, p)| NamedPolicy::new(n.clone(), p.as_dyn())));
    let report = evaluate_offline(&test, &named, &propensity_model, loss_model.as_ref(), floor)?;

    ensure_dir(&out)?;
    let mut doc = output_document("blbf evaluation", "evaluate", &a);
    let s = doc.section("inputs");
    s.set("test_sha256", file_digest(&test_path)?)
        .set("propensity_model_sha256", file_digest(&pm_path)?)
        .set(
            "loss_model_sha256",
            match &a.loss_model {
                Some(p) => file_digest(p)?,
                None => "none".into(),
            },
        );
    for (name, d) in &policy_digests {
        s.set(format!("policy.{name}.sha256"), d.clone());
    }
    report.write_into(&mut doc, "");
    write_doc(&doc, &out.join("evaluation.txt"))?;

    let mut o = Output::default();
    o.stdout.push_str(&report.render_table());
    Ok(o)
}

pub fn gradcheck(flags: GradcheckArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let instances = a.instances.unwrap_or(100);
    if instances == 0 {
        return Err(usage("--instances must be positive"));
    }
    let step = a.step.unwrap_or(1e-5);
    if !(step > 0.0 && step.is_finite()) {
        return Err(usage(format!("--step {step} must be positive")));
    }
    let report = run_suite(
        instances,
        step,
        a.seed.unwrap_or(0),
        a.inject_sign_flip.unwrap_or(false),
    )?;
    let mut o = Output::default();
    if let Some(w) = &report.warning {
        o.warn(w);
    }
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    o.line(format!("{verdict} max_rel_err={:e}", report.max_rel_error));
    if !report.passed() {
        o.status = EXIT_NUMERIC;
    }
    if let Some(out) = &a.out {
        ensure_dir(out)?;
        let mut doc = output_document("blbf gradcheck", "gradcheck", &a);
        doc.section("gradcheck")
            .set("verdict", verdict)
            .set("instances", instances.to_string())
            .set_f64("step", step)
            .set_f64("max_rel_error", report.max_rel_error)
            .set("worst_instance", report.worst.to_string())
            .set("warning", report.warning.clone().unwrap_or_else(|| "none".into()));
        write_doc(&doc, &out.join("gradcheck.txt"))?;
    }
    Ok(o)
}

pub fn simulation_config(a: &SimulateArgs) -> CliResult<SimulationConfig> {
    let d = SimulationConfig::default();
    let seed = a.seed.unwrap_or(d.seed);
    let methods = if a.method.is_empty() {
        d.methods.clone()
    } else {
        a.method
            .iter()
            .map(|m| Method::parse(m.trim()))
            .collect::<blbf::Result<Vec<_>>>()?
    };
    let task = CountingTask {
        n: a.n.unwrap_or(d.task.n),
        n_classes: a.classes.unwrap_or(d.task.n_classes),
        vocab: a.vocab.unwrap_or(d.task.vocab),
        ..d.task
    };
    task.validate()?;
    let logging = LoggingPolicyConfig {
        subset_fraction: a.subset_fraction.unwrap_or(d.logging.subset_fraction),
        band: parse_band(a.band.as_deref(), d.logging.band)?,
        arch: parse_arch(a.logger_arch.as_deref(), d.logging.arch)?,
        learning_rate: a.logger_learning_rate.unwrap_or(d.logging.learning_rate),
        ..d.logging
    };
    Ok(SimulationConfig {
        task,
        methods,
        folds: a.folds.unwrap_or(d.folds),
        seed,
        featurizer_mode: match &a.featurizer {
            Some(m) => FeaturizerMode::parse(m)?,
            None => d.featurizer_mode,
        },
        standardize: a.standardize.unwrap_or(d.standardize),
        arch: parse_arch(a.train.arch.as_deref(), d.arch)?,
        train: train_config(&a.train, seed)?,
        logging,
        test_fraction: a.test_fraction.unwrap_or(d.test_fraction),
        disjoint_logging_subset: !a.include_logger_subset.unwrap_or(!d.disjoint_logging_subset),
        offline_report: a.offline_report.unwrap_or(d.offline_report),
    })
}

pub fn simulate(flags: SimulateArgs) -> CliResult<Output> {
    let a = resolve(&flags, flags.config.as_ref())?;
    let out = require(&a.out, "out")?;
    let cfg = simulation_config(&a)?;
    let report = run_simulation_study(&cfg)?;
    ensure_dir(&out)?;
    let mut doc = output_document("blbf simulation", "simulate", &a);
    report.write_into(&mut doc);
    write_doc(&doc, &out.join("simulation.txt"))?;
    let mut o = Output::default();
    o.stdout.push_str(&report.render_table());
    if let Some(off) = report.folds.first().and_then(|f| f.offline.as_ref()) {
        o.line("");
        o.line("offline report, fold 0:");
        o.stdout.push_str(&off.render_table());
    }
    Ok(o)
}
