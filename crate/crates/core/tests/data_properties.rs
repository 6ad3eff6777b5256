//! Generator, conversion and split invariants.

use std::collections::HashSet;

use blbf::data::{
    convert_to_bandit, generate_counting_task, group_split, read_logged_csv, write_logged_csv, CountingTask, CsvSchema,
    LoggedDataset, LoggedSample,
};
use blbf::policy::{Architecture, Featurizer, FeaturizerMode, SoftmaxPolicy};
use proptest::prelude::*;

fn small_task(n: usize) -> CountingTask {
    CountingTask {
        n,
        vocab: 20,
        ..CountingTask::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn conversion_loss_law_and_propensity_fidelity(seed in any::<u64>(), arch_hidden in any::<bool>()) {
        let task = small_task(120);
        let data = generate_counting_task(&task, seed).unwrap();
        let feat = Featurizer::new(FeaturizerMode::MeanPool, task.vocab, 0);
        let arch = if arch_hidden { Architecture::Hidden(4) } else { Architecture::Linear };
        let mut logger = SoftmaxPolicy::random(task.vocab, arch, task.n_classes, seed ^ 1);
        for w in logger.network_mut().unwrap().params_mut() {
            *w *= 40.0;
        }
        let conv = convert_to_bandit(&data, &feat, &logger, seed).unwrap();
        for (s, &label) in conv.dataset.samples().iter().zip(&conv.labels) {
            prop_assert_eq!(s.loss == 0.0, s.action == label);
            prop_assert!(s.loss == 0.0 || s.loss == 1.0);
            let mu = logger.action_distribution(&s.features).unwrap();
            prop_assert!((s.logged_propensity.unwrap() - mu[s.action]).abs() <= 1e-12);
            prop_assert!(mu[s.action] > 0.0);
        }
    }

    #[test]
    fn group_split_never_leaks(
        groups in prop::collection::vec(0u8..12, 4..80),
        frac in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let samples: Vec<LoggedSample> = groups
            .iter()
            .map(|g| LoggedSample {
                features: vec![*g as f64],
                action: 0,
                loss: 0.0,
                logged_propensity: None,
                group_id: Some(format!("g{g}")),
            })
            .collect();
        prop_assume!(groups.iter().collect::<HashSet<_>>().len() >= 2);
        let d = LoggedDataset::new(samples, 2).unwrap();
        let (a, b) = group_split(&d, frac, seed).unwrap();
        prop_assert_eq!(a.len() + b.len(), d.len());
        let left: HashSet<&str> = a.group_ids().collect();
        let right: HashSet<&str> = b.group_ids().collect();
        prop_assert!(left.is_disjoint(&right));
    }

    #[test]
    fn csv_round_trip_is_exact(
        rows in prop::collection::vec((0usize..4, -3.0f64..3.0, 0.001f64..1.0, prop::collection::vec(-1e6f64..1e6, 3)), 1..20),
    ) {
        let samples: Vec<LoggedSample> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (a, l, p, f))| LoggedSample {
                features: f,
                action: a,
                loss: l,
                logged_propensity: Some(p),
                group_id: Some(format!("p{i}")),
            })
            .collect();
        let d = LoggedDataset::new(samples, 4).unwrap();
        let mut buf = Vec::new();
        write_logged_csv(&d, &mut buf).unwrap();
        let back = read_logged_csv(buf.as_slice(), &CsvSchema::default().with_n_actions(4)).unwrap();
        prop_assert_eq!(back, d);
    }
}

#[test]
fn generator_is_balanced_at_full_size() {
    let task = CountingTask::default();
    assert_eq!(task.n, 10_000);
    let data = generate_counting_task(&task, 7).unwrap();
    let mut counts = vec![0usize; task.n_classes];
    for s in &data {
        counts[s.label] += 1;
    }
    for c in counts {
        let freq = c as f64 / task.n as f64;
        assert!((freq - 1.0 / task.n_classes as f64).abs() <= 0.02, "{freq}");
    }
}

#[test]
fn uniform_logger_gives_one_over_k() {
    let task = small_task(60);
    let data = generate_counting_task(&task, 3).unwrap();
    let feat = Featurizer::new(FeaturizerMode::MeanPool, task.vocab, 0);
    let logger = SoftmaxPolicy::zeros(task.vocab, Architecture::Linear, 3);
    let conv = convert_to_bandit(&data, &feat, &logger, 3).unwrap();
    assert!(conv
        .dataset
        .samples()
        .iter()
        .all(|s| s.logged_propensity == Some(1.0 / 3.0)));
}
