//! Randomized finite-difference suite over translated IPS objectives.

use blbf::data::{LoggedDataset, LoggedSample};
use blbf::numeric::{derive_seed, seeded_rng};
use blbf::policy::{Architecture, SoftmaxPolicy};
use blbf::training::{finite_difference_check, DifferentiableObjective, TipsObjective};
use blbf::Result;
use rand::Rng;

pub const LAMBDAS: [f64; 3] = [0.0, 0.5, 0.9];

/// Negates the analytic gradient of the wrapped objective.
pub struct SignFlip<'a>(pub &'a dyn DifferentiableObjective);

impl DifferentiableObjective for SignFlip<'_> {
    fn params(&self) -> Vec<f64> {
        self.0.params()
    }

    fn value_at(&self, params: &[f64]) -> Result<f64> {
        self.0.value_at(params)
    }

    fn gradient_at(&self, params: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.gradient_at(params)?.into_iter().map(|g| -g).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub instances: usize,
    pub max_rel_error: f64,
    /// Instance index with the largest error.
    pub worst: usize,
    pub warning: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < 1e-4
    }
}

/// Instance `i` alternates linear and hidden-layer policies and cycles
/// lambda through 0, 0.5 and 0.9.
pub fn instance(seed: u64, i: usize) -> (LoggedDataset, Vec<f64>, SoftmaxPolicy, f64) {
    let mut rng = seeded_rng(derive_seed(seed, i as u64));
    let d = rng.gen_range(1..=4);
    let k = rng.gen_range(2..=4);
    let m = rng.gen_range(2..=8);
    let arch = if i.is_multiple_of(2) {
        Architecture::Linear
    } else {
        Architecture::Hidden(rng.gen_range(1..=5))
    };
    let samples: Vec<LoggedSample> = (0..m)
        .map(|_| LoggedSample {
            features: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            action: rng.gen_range(0..k),
            loss: if rng.gen::<bool>() {
                1.0
            } else {
                rng.gen_range(0.0..1.0)
            },
            logged_propensity: None,
            group_id: None,
        })
        .collect();
    let props: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut policy = SoftmaxPolicy::random(d, arch, k, rng.gen());
    for w in policy
        .network_mut()
        .expect("random policies have a network")
        .params_mut()
    {
        *w *= 20.0;
    }
    let dataset = LoggedDataset::new(samples, k).expect("generated samples are valid");
    (dataset, props, policy, LAMBDAS[i % LAMBDAS.len()])
}

pub fn run_suite(instances: usize, step: f64, seed: u64, flip_sign: bool) -> Result<SuiteReport> {
    let mut report = SuiteReport {
        instances,
        max_rel_error: 0.0,
        worst: 0,
        warning: None,
    };
    for i in 0..instances {
        let (dataset, propensities, policy, lambda) = instance(seed, i);
        let objective = TipsObjective {
            policy,
            samples: dataset.samples().iter().collect(),
            propensities,
            lambda,
        };
        let flipped = SignFlip(&objective);
        let target: &dyn DifferentiableObjective = if flip_sign { &flipped } else { &objective };
        let fd = finite_difference_check(target, step, derive_seed(seed, i as u64))?;
        if i == 0 || fd.max_rel_error > report.max_rel_error {
            report.max_rel_error = fd.max_rel_error;
            report.worst = i;
        }
        if report.warning.is_none() {
            report.warning = fd.warning;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_sign_flip_fails() {
        assert!(run_suite(12, 1e-5, 1, false).unwrap().passed());
        assert!(!run_suite(12, 1e-5, 1, true).unwrap().passed());
    }

    #[test]
    fn tiny_step_warns() {
        assert!(run_suite(1, 1e-12, 1, false).unwrap().warning.is_some());
        assert!(run_suite(1, 1e-5, 1, false).unwrap().warning.is_none());
    }

    #[test]
    fn instances_cover_both_architectures_and_all_lambdas() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..6 {
            let (_, _, p, l) = instance(3, i);
            seen.insert((p.network().unwrap().arch() == Architecture::Linear, (l * 10.0) as i32));
        }
        assert_eq!(seen.len(), 6);
    }
}
