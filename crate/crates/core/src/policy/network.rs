//! Dense feed-forward maps with hand-written backpropagation.
//!
//! Parameter layout (flat, row-major with the input index outermost):
//! linear `W[d][K], b[K]`; hidden `W1[d][h], b1[h], W2[h][K], b2[K]`.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::numeric::Rng;

pub const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Linear,
    /// One tanh hidden layer of the given width.
    Hidden(usize),
}

impl Architecture {
    pub fn name(self) -> String {
        match self {
            Architecture::Linear => "linear".into(),
            Architecture::Hidden(h) => format!("hidden:{h}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "linear" {
            return Ok(Architecture::Linear);
        }
        s.strip_prefix("hidden:")
            .and_then(|h| h.parse().ok())
            .filter(|&h| h > 0)
            .map(Architecture::Hidden)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown architecture `{s}`")))
    }

    pub fn param_count(self, input_dim: usize, n_out: usize) -> usize {
        match self {
            Architecture::Linear => input_dim * n_out + n_out,
            Architecture::Hidden(h) => input_dim * h + h + h * n_out + n_out,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    arch: Architecture,
    n_out: usize,
    params: Vec<f64>,
}

/// Per-input activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

impl Network {
    pub fn zeros(input_dim: usize, arch: Architecture, n_out: usize) -> Self {
        Self {
            input_dim,
            arch,
            n_out,
            params: vec![0.0; arch.param_count(input_dim, n_out)],
        }
    }

    /// Every parameter uniform in `[-INIT_RANGE, INIT_RANGE]`.
    pub fn random(input_dim: usize, arch: Architecture, n_out: usize, rng: &mut Rng) -> Self {
        let mut net = Self::zeros(input_dim, arch, n_out);
        for p in &mut net.params {
            *p = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
        }
        net
    }

    pub fn from_params(input_dim: usize, arch: Architecture, n_out: usize, params: Vec<f64>) -> Result<Self> {
        let expected = arch.param_count(input_dim, n_out);
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                what: "parameter list",
                expected,
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(Self {
            input_dim,
            arch,
            n_out,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward_into(&self, x: &[f64], act: &mut Activations) {
        debug_assert_eq!(x.len(), self.input_dim);
        let (d, k) = (self.input_dim, self.n_out);
        act.logits.clear();
        match self.arch {
            Architecture::Linear => {
                act.hidden.clear();
                act.logits.extend_from_slice(&self.params[d * k..d * k + k]);
                dense_accumulate(x, &self.params[..d * k], k, &mut act.logits);
            }
            Architecture::Hidden(h) => {
                let w2 = d * h + h;
                act.hidden.clear();
                act.hidden.extend_from_slice(&self.params[d * h..w2]);
                dense_accumulate(x, &self.params[..d * h], h, &mut act.hidden);
                for v in &mut act.hidden {
                    *v = v.tanh();
                }
                let b2 = w2 + h * k;
                act.logits.extend_from_slice(&self.params[b2..b2 + k]);
                dense_accumulate(&act.hidden, &self.params[w2..b2], k, &mut act.logits);
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Activations {
        let mut act = Activations::default();
        self.forward_into(x, &mut act);
        act
    }

    /// Adds `scale * d(output . dlogits)/dparams` into `grad`.
    pub fn backward(&self, x: &[f64], act: &Activations, dlogits: &[f64], scale: f64, grad: &mut [f64]) {
        let (d, k) = (self.input_dim, self.n_out);
        match self.arch {
            Architecture::Linear => {
                outer_accumulate(x, dlogits, scale, &mut grad[..d * k]);
                for (g, dz) in grad[d * k..].iter_mut().zip(dlogits) {
                    *g += scale * dz;
                }
            }
            Architecture::Hidden(h) => {
                let w2 = d * h + h;
                let b2 = w2 + h * k;
                outer_accumulate(&act.hidden, dlogits, scale, &mut grad[w2..b2]);
                for (g, dz) in grad[b2..].iter_mut().zip(dlogits) {
                    *g += scale * dz;
                }
                let mut dpre = vec![0.0; h];
                for (u, dp) in dpre.iter_mut().enumerate() {
                    let row = &self.params[w2 + u * k..w2 + (u + 1) * k];
                    let dh: f64 = row.iter().zip(dlogits).map(|(w, dz)| w * dz).sum();
                    let hu = act.hidden[u];
                    *dp = dh * (1.0 - hu * hu);
                }
                outer_accumulate(x, &dpre, scale, &mut grad[..d * h]);
                for (g, dp) in grad[d * h..w2].iter_mut().zip(&dpre) {
                    *g += scale * dp;
                }
            }
        }
    }
}

/// `out[k] += sum_j x[j] * w[j*K + k]`, skipping zero inputs.
fn dense_accumulate(x: &[f64], w: &[f64], k: usize, out: &mut [f64]) {
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let row = &w[j * k..(j + 1) * k];
        for (o, wjk) in out.iter_mut().zip(row) {
            *o += xj * wjk;
        }
    }
}

/// `g[j*K + k] += scale * x[j] * dz[k]`, skipping zero inputs.
fn outer_accumulate(x: &[f64], dz: &[f64], scale: f64, g: &mut [f64]) {
    let k = dz.len();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let s = scale * xj;
        for (gjk, dzk) in g[j * k..(j + 1) * k].iter_mut().zip(dz) {
            *gjk += s * dzk;
        }
    }
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Optimizer settings shared by every trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdSettings {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

/// One epoch of mini-batch gradient descent with heavy-ball momentum over
/// `order`. `batch_grad` writes the mean gradient of a batch into its third
/// argument (zeroed beforehand) and returns the batch mean objective.
/// Returns the sample-weighted mean objective of the epoch.
pub fn sgd_epoch<F>(
    net: &mut Network,
    order: &[usize],
    settings: SgdSettings,
    velocity: &mut [f64],
    mut batch_grad: F,
) -> Result<f64>
where
    F: FnMut(&Network, &[usize], &mut [f64]) -> Result<f64>,
{
    let mut grad = vec![0.0; net.params.len()];
    let mut total = 0.0;
    for batch in order.chunks(settings.batch_size.max(1)) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let obj = batch_grad(net, batch, &mut grad)?;
        total += obj * batch.len() as f64;
        for ((w, v), g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *v = settings.momentum * *v - settings.learning_rate * g;
            *w += *v;
        }
    }
    Ok(total / order.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::seeded_rng;

    #[test]
    fn softmax_closed_form() {
        let p = softmax(&[0.0, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        assert_eq!(softmax(&[5.0, 5.0, 5.0]), vec![1.0 / 3.0; 3]);
        let big = softmax(&[1e3, -1e3, 0.0]);
        assert!(big.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn param_counts() {
        assert_eq!(Architecture::Linear.param_count(4, 3), 15);
        assert_eq!(Architecture::Hidden(5).param_count(4, 3), 20 + 5 + 15 + 3);
        assert_eq!(Architecture::parse("hidden:64").unwrap(), Architecture::Hidden(64));
        assert!(Architecture::parse("hidden:0").is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seeded_rng(4);
        for arch in [Architecture::Linear, Architecture::Hidden(3)] {
            let net = Network::random(4, arch, 2, &mut rng);
            let x = [0.3, 0.0, -1.2, 0.7];
            let dz = [0.4, -1.1];
            let f = |n: &Network| {
                let a = n.forward(&x);
                a.logits[0] * dz[0] + a.logits[1] * dz[1]
            };
            let mut grad = vec![0.0; net.params().len()];
            net.backward(&x, &net.forward(&x), &dz, 1.0, &mut grad);
            for i in 0..grad.len() {
                let mut plus = net.clone();
                plus.params_mut()[i] += 1e-6;
                let mut minus = net.clone();
                minus.params_mut()[i] -= 1e-6;
                let fd = (f(&plus) - f(&minus)) / 2e-6;
                assert!((fd - grad[i]).abs() < 1e-7, "{arch:?} param {i}: {fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let a = Network::random(10, Architecture::Hidden(8), 3, &mut seeded_rng(1));
        let b = Network::random(10, Architecture::Hidden(8), 3, &mut seeded_rng(1));
        assert_eq!(a, b);
        assert!(a.params().iter().all(|p| p.abs() <= INIT_RANGE));
    }
}
