//! On a one-parameter policy family the lambda grid must find the same SNIPS
//! optimum as brute force over the parameter.

use blbf::data::{LoggedDataset, LoggedSample, ToyEnvironment};
use blbf::estimators::snips_risk;
use blbf::numeric::seeded_rng;
use blbf::policy::Architecture;
use blbf::training::{etips_train, TrainConfig};
use rand::Rng;

/// Three contexts sharing the constant feature 1.0, so a linear two-action
/// policy reduces to a single logit difference.
fn toy(losses: Vec<Vec<f64>>) -> ToyEnvironment {
    ToyEnvironment::new(vec![0.5, 0.3, 0.2], losses, vec![vec![1.0]; 3]).unwrap()
}

fn log(env: &ToyEnvironment, p_one: f64, m: usize, seed: u64) -> LoggedDataset {
    let mut rng = seeded_rng(seed);
    let samples = (0..m)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut c = 0;
            let mut acc = env.context_probs()[0];
            while u > acc && c + 1 < env.n_contexts() {
                c += 1;
                acc += env.context_probs()[c];
            }
            let action = usize::from(rng.gen::<f64>() < p_one);
            LoggedSample {
                features: env.context_features(c).to_vec(),
                action,
                loss: env.loss(c, action),
                logged_propensity: Some(if action == 1 { p_one } else { 1.0 - p_one }),
                group_id: Some(format!("g{c}")),
            }
        })
        .collect();
    LoggedDataset::new(samples, 2).unwrap()
}

/// SNIPS of the policy with P(action 1) = q, minimized over a dense grid of q.
fn dense_sweep(ds: &LoggedDataset, props: &[f64]) -> f64 {
    (0..=10_000)
        .map(|i| {
            let q = i as f64 / 10_000.0;
            let probs: Vec<f64> = ds
                .samples()
                .iter()
                .map(|s| if s.action == 1 { q } else { 1.0 - q })
                .collect();
            snips_risk(ds, &probs, props).map(|r| r.value).unwrap_or(f64::INFINITY)
        })
        .fold(f64::INFINITY, f64::min)
}

fn config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 1.0,
        epochs: 40,
        seed,
        lambda_grid: (1..=11).map(|i| i as f64 / 12.0).collect(),
        ..TrainConfig::default()
    }
}

#[test]
fn grid_matches_dense_sweep() {
    let envs = [
        toy(vec![vec![0.2, 0.7], vec![0.4, 0.9], vec![0.1, 0.5]]),
        toy(vec![vec![0.8, 0.3], vec![0.6, 0.2], vec![0.9, 0.4]]),
        toy(vec![vec![0.5, 0.45], vec![0.3, 0.2], vec![0.7, 0.9]]),
    ];
    for (i, env) in envs.iter().enumerate() {
        let ds = log(env, 0.3, 300, 10 + i as u64);
        let out = etips_train(&ds, &ds, Architecture::Linear, Architecture::Linear, &config(i as u64)).unwrap();
        let grid_best = out.grid.best_run().snips.unwrap();
        let direct = dense_sweep(&ds, &out.propensities.values);
        assert!(
            (grid_best - direct).abs() <= 0.02,
            "env {i}: grid {grid_best} vs dense {direct}"
        );
    }
}
