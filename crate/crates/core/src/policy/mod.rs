//! Featurization, softmax policies, loss models and their supervised training.

mod featurizer;
mod model_file;
mod network;
mod supervised;

pub use featurizer::{Featurizer, FeaturizerMode};
pub use model_file::{ModelFile, StoredModel};
pub use network::{sgd_epoch, sigmoid, softmax, Activations, Architecture, Network, SgdSettings, INIT_RANGE};
pub use supervised::{
    baseline_policy, estimate_propensities, train_logging_policy, train_loss_model, train_supervised, BaselineKind,
    LoggingFit, LoggingPolicyConfig, PropensityEstimate, SupervisedFit,
};

use crate::data::LoggedDataset;
use crate::error::{Error, Result};
use crate::numeric::{argmax_lowest, argmin_lowest, seeded_rng};

/// Anything that can pick an action for a feature vector.
pub trait ActionPolicy {
    fn input_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn greedy_action(&self, x: &[f64]) -> Result<usize>;
    /// Action probabilities, or `None` for policies that expose no probability.
    fn distribution(&self, x: &[f64]) -> Result<Option<Vec<f64>>>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyBody {
    Network(Network),
    /// Deterministic choice of one action regardless of input.
    PointMass {
        input_dim: usize,
        action: usize,
    },
}

/// Stochastic policy `pi(a|x) = softmax(f_w(x))_a` over `n_actions` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    body: PolicyBody,
    n_actions: usize,
}

fn check_input(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("policy input".into()));
    }
    Ok(())
}

impl SoftmaxPolicy {
    pub fn from_network(net: Network) -> Self {
        let n_actions = net.n_out();
        Self {
            body: PolicyBody::Network(net),
            n_actions,
        }
    }

    /// All-zero parameters, hence the exact uniform distribution.
    pub fn zeros(input_dim: usize, arch: Architecture, n_actions: usize) -> Self {
        Self::from_network(Network::zeros(input_dim, arch, n_actions))
    }

    pub fn random(input_dim: usize, arch: Architecture, n_actions: usize, seed: u64) -> Self {
        Self::from_network(Network::random(input_dim, arch, n_actions, &mut seeded_rng(seed)))
    }

    pub fn point_mass(input_dim: usize, n_actions: usize, action: usize) -> Result<Self> {
        if action >= n_actions {
            return Err(Error::InvalidArgument(format!(
                "action {action} outside [0, {n_actions})"
            )));
        }
        Ok(Self {
            body: PolicyBody::PointMass { input_dim, action },
            n_actions,
        })
    }

    pub fn body(&self) -> &PolicyBody {
        &self.body
    }

    pub fn network(&self) -> Option<&Network> {
        match &self.body {
            PolicyBody::Network(n) => Some(n),
            PolicyBody::PointMass { .. } => None,
        }
    }

    pub fn network_mut(&mut self) -> Option<&mut Network> {
        match &mut self.body {
            PolicyBody::Network(n) => Some(n),
            PolicyBody::PointMass { .. } => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.body, PolicyBody::PointMass { .. })
    }

    pub fn input_dim(&self) -> usize {
        match &self.body {
            PolicyBody::Network(n) => n.input_dim(),
            PolicyBody::PointMass { input_dim, .. } => *input_dim,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn param_count(&self) -> usize {
        self.network().map_or(0, |n| n.params().len())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        check_input(x, self.input_dim())?;
        Ok(self.network().map(|n| n.forward(x).logits))
    }

    pub fn action_distribution(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x, self.input_dim())?;
        let probs = match &self.body {
            PolicyBody::Network(n) => softmax(&n.forward(x).logits),
            PolicyBody::PointMass { action, .. } => {
                let mut p = vec![0.0; self.n_actions];
                p[*action] = 1.0;
                p
            }
        };
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("policy probabilities".into()));
        }
        Ok(probs)
    }

    /// Highest-probability action, ties to the lowest id.
    pub fn greedy_action(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.action_distribution(x)?))
    }

    /// `pi(a_i | x_i)` for every logged sample.
    pub fn logged_action_probabilities(&self, dataset: &LoggedDataset) -> Result<Vec<f64>> {
        dataset
            .samples()
            .iter()
            .map(|s| Ok(self.action_distribution(&s.features)?[s.action]))
            .collect()
    }
}

impl ActionPolicy for SoftmaxPolicy {
    fn input_dim(&self) -> usize {
        SoftmaxPolicy::input_dim(self)
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn greedy_action(&self, x: &[f64]) -> Result<usize> {
        SoftmaxPolicy::greedy_action(self, x)
    }

    fn distribution(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        if self.is_deterministic() {
            check_input(x, self.input_dim())?;
            return Ok(None);
        }
        self.action_distribution(x).map(Some)
    }
}

/// Predicted loss for a context and action.
pub trait LossPredictor {
    fn predict(&self, x: &[f64], action: usize) -> Result<f64>;
}

/// Predicts the same loss everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLoss(pub f64);

impl LossPredictor for ConstantLoss {
    fn predict(&self, _x: &[f64], _action: usize) -> Result<f64> {
        Ok(self.0)
    }
}

/// Regressor `(x, onehot(a)) -> lo + (hi - lo) * sigmoid(f_w(x, a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    net: Network,
    n_actions: usize,
    lo: f64,
    hi: f64,
}

impl LossModel {
    pub fn new(net: Network, n_actions: usize, lo: f64, hi: f64) -> Result<Self> {
        if net.n_out() != 1 || net.input_dim() < n_actions {
            return Err(Error::InvalidArgument(
                "loss model network must map features plus one-hot action to one output".into(),
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("bad loss range [{lo}, {hi}]")));
        }
        Ok(Self { net, n_actions, lo, hi })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn feature_dim(&self) -> usize {
        self.net.input_dim() - self.n_actions
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub(crate) fn joint_input(x: &[f64], action: usize, n_actions: usize) -> Vec<f64> {
        let mut z = Vec::with_capacity(x.len() + n_actions);
        z.extend_from_slice(x);
        z.extend((0..n_actions).map(|a| if a == action { 1.0 } else { 0.0 }));
        z
    }
}

impl LossPredictor for LossModel {
    fn predict(&self, x: &[f64], action: usize) -> Result<f64> {
        check_input(x, self.feature_dim())?;
        if action >= self.n_actions {
            return Err(Error::InvalidArgument(format!(
                "action {action} outside loss model range"
            )));
        }
        let z = self.net.forward(&Self::joint_input(x, action, self.n_actions)).logits[0];
        Ok(self.lo + (self.hi - self.lo) * sigmoid(z))
    }
}

/// `argmin_a loss_model(x, a)`, ties to the lowest id.
pub fn direct_method_action(loss_model: &dyn LossPredictor, x: &[f64], n_actions: usize) -> Result<usize> {
    let preds = (0..n_actions)
        .map(|a| loss_model.predict(x, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin_lowest(&preds))
}

/// Greedy policy over a loss model. With a temperature it also exposes the
/// softened distribution `softmax(-loss / temperature)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMethodPolicy {
    pub model: LossModel,
    pub softened_temperature: Option<f64>,
}

impl ActionPolicy for DirectMethodPolicy {
    fn input_dim(&self) -> usize {
        self.model.feature_dim()
    }

    fn n_actions(&self) -> usize {
        self.model.n_actions()
    }

    fn greedy_action(&self, x: &[f64]) -> Result<usize> {
        direct_method_action(&self.model, x, self.model.n_actions())
    }

    fn distribution(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        match self.softened_temperature {
            None => {
                check_input(x, self.input_dim())?;
                Ok(None)
            }
            Some(t) => {
                let neg: Vec<f64> = (0..self.model.n_actions())
                    .map(|a| self.model.predict(x, a).map(|l| -l / t))
                    .collect::<Result<_>>()?;
                Ok(Some(softmax(&neg)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_uniform() {
        let p = SoftmaxPolicy::zeros(3, Architecture::Hidden(4), 25);
        let d = p.action_distribution(&[1.0, -2.0, 3.0]).unwrap();
        assert!(d.iter().all(|&q| q == 0.04));
        assert_eq!(p.greedy_action(&[0.0; 3]).unwrap(), 0);
    }

    #[test]
    fn greedy_picks_max() {
        let net = Network::from_params(
            1,
            Architecture::Linear,
            3,
            vec![0.0, 0.0, 0.0, 0.1f64.ln(), 0.7f64.ln(), 0.2f64.ln()],
        )
        .unwrap();
        let p = SoftmaxPolicy::from_network(net);
        assert_eq!(p.greedy_action(&[5.0]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let p = SoftmaxPolicy::zeros(2, Architecture::Linear, 2);
        assert!(p.action_distribution(&[1.0]).is_err());
        assert!(p.action_distribution(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn point_mass_has_no_distribution() {
        let p = SoftmaxPolicy::point_mass(2, 3, 2).unwrap();
        assert_eq!(ActionPolicy::distribution(&p, &[0.0, 0.0]).unwrap(), None);
        assert_eq!(p.greedy_action(&[0.0, 0.0]).unwrap(), 2);
    }

    struct Table(Vec<f64>);
    impl LossPredictor for Table {
        fn predict(&self, _x: &[f64], a: usize) -> Result<f64> {
            Ok(self.0[a])
        }
    }

    #[test]
    fn direct_method_ties_and_argmin() {
        assert_eq!(direct_method_action(&ConstantLoss(0.5), &[1.0], 4).unwrap(), 0);
        assert_eq!(direct_method_action(&Table(vec![0.9, 0.1, 0.4]), &[1.0], 3).unwrap(), 1);
    }

    #[test]
    fn loss_model_output_in_range() {
        let net = Network::random(2 + 3, Architecture::Hidden(4), 1, &mut seeded_rng(3));
        let m = LossModel::new(net, 3, 0.0, 1.0).unwrap();
        for a in 0..3 {
            let v = m.predict(&[100.0, -100.0], a).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
