use crate::data::{Sequence, SupervisedSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturizerMode {
    MeanPool,
    LastStep,
    MeanPoolConcatStatic,
}

impl FeaturizerMode {
    pub fn name(self) -> &'static str {
        match self {
            FeaturizerMode::MeanPool => "mean-pool",
            FeaturizerMode::LastStep => "last-step",
            FeaturizerMode::MeanPoolConcatStatic => "mean-pool-concat-static",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mean-pool" => Ok(FeaturizerMode::MeanPool),
            "last-step" => Ok(FeaturizerMode::LastStep),
            "mean-pool-concat-static" => Ok(FeaturizerMode::MeanPoolConcatStatic),
            other => Err(Error::InvalidArgument(format!("unknown featurizer mode `{other}`"))),
        }
    }
}

/// Fixed sequence encoder. Token sequences are treated as one-hot rows.
/// An optional per-dimension scale is applied after pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    mode: FeaturizerMode,
    token_width: usize,
    static_width: usize,
    scale: Option<Vec<f64>>,
}

impl Featurizer {
    pub fn new(mode: FeaturizerMode, token_width: usize, static_width: usize) -> Self {
        let static_width = match mode {
            FeaturizerMode::MeanPoolConcatStatic => static_width,
            _ => 0,
        };
        Self {
            mode,
            token_width,
            static_width,
            scale: None,
        }
    }

    pub fn mode(&self) -> FeaturizerMode {
        self.mode
    }

    pub fn token_width(&self) -> usize {
        self.token_width
    }

    pub fn static_width(&self) -> usize {
        self.static_width
    }

    pub fn scale(&self) -> Option<&[f64]> {
        self.scale.as_deref()
    }

    pub fn output_dim(&self) -> usize {
        self.token_width + self.static_width
    }

    pub fn with_scale(mut self, scale: Vec<f64>) -> Result<Self> {
        if scale.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                actual: scale.len(),
            });
        }
        if scale.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("featurizer scale".into()));
        }
        self.scale = Some(scale);
        Ok(self)
    }

    /// Sets the scale to the reciprocal population standard deviation of
    /// each output dimension over `samples` (1 where a dimension is constant).
    /// Zero features stay zero.
    pub fn fit_scale(self, samples: &[SupervisedSample]) -> Result<Self> {
        let raw = Featurizer {
            scale: None,
            ..self.clone()
        };
        let d = self.output_dim();
        let n = samples.len() as f64;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for s in samples {
            let f = raw.featurize(&s.sequence, &s.static_features)?;
            for j in 0..d {
                sum[j] += f[j];
                sq[j] += f[j] * f[j];
            }
        }
        let scale = (0..d)
            .map(|j| {
                let mean = sum[j] / n;
                let var = (sq[j] / n - mean * mean).max(0.0);
                if var.sqrt() > 1e-12 {
                    1.0 / var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        self.with_scale(scale)
    }

    pub fn featurize(&self, sequence: &Sequence, static_features: &[f64]) -> Result<Vec<f64>> {
        if sequence.is_empty() {
            return Err(Error::InvalidData("sequence must contain at least one step".into()));
        }
        if sequence.width() != self.token_width {
            return Err(Error::DimensionMismatch {
                expected: self.token_width,
                actual: sequence.width(),
            });
        }
        let t = sequence.len();
        let mut out = vec![0.0; self.output_dim()];
        match (self.mode, sequence) {
            (FeaturizerMode::LastStep, Sequence::Tokens { ids, .. }) => {
                out[check_token(*ids.last().unwrap(), self.token_width)?] = 1.0;
            }
            (FeaturizerMode::LastStep, Sequence::Rows { width, values }) => {
                out[..*width].copy_from_slice(&values[(t - 1) * width..]);
            }
            (_, Sequence::Tokens { ids, .. }) => {
                let mut counts = vec![0usize; self.token_width];
                for &id in ids {
                    counts[check_token(id, self.token_width)?] += 1;
                }
                for (o, c) in out.iter_mut().zip(counts) {
                    *o = c as f64 / t as f64;
                }
            }
            (_, Sequence::Rows { width, values }) => {
                for row in values.chunks_exact(*width) {
                    for (o, v) in out.iter_mut().zip(row) {
                        *o += v;
                    }
                }
                for o in &mut out[..*width] {
                    *o /= t as f64;
                }
            }
        }
        if self.mode == FeaturizerMode::MeanPoolConcatStatic {
            if static_features.len() != self.static_width {
                return Err(Error::DimensionMismatch {
                    expected: self.static_width,
                    actual: static_features.len(),
                });
            }
            out[self.token_width..].copy_from_slice(static_features);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("featurized input".into()));
        }
        if let Some(scale) = &self.scale {
            for (o, s) in out.iter_mut().zip(scale) {
                *o *= s;
            }
        }
        Ok(out)
    }

    pub fn featurize_all(&self, samples: &[SupervisedSample]) -> Result<Vec<Vec<f64>>> {
        samples
            .iter()
            .map(|s| self.featurize(&s.sequence, &s.static_features))
            .collect()
    }
}

fn check_token(id: u32, vocab: usize) -> Result<usize> {
    let id = id as usize;
    if id >= vocab {
        return Err(Error::InvalidData(format!("token {id} outside vocabulary of {vocab}")));
    }
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(width: usize, values: Vec<f64>) -> Sequence {
        Sequence::Rows { width, values }
    }

    #[test]
    fn mean_pool_of_identical_rows() {
        let f = Featurizer::new(FeaturizerMode::MeanPool, 3, 0);
        let r = [0.1, -2.0, 7.5];
        let seq = rows(3, r.repeat(4));
        assert_eq!(f.featurize(&seq, &[]).unwrap(), r.to_vec());
    }

    #[test]
    fn last_step() {
        let f = Featurizer::new(FeaturizerMode::LastStep, 2, 0);
        assert_eq!(
            f.featurize(&rows(2, vec![1.0, 2.0, 3.0, 4.0]), &[]).unwrap(),
            vec![3.0, 4.0]
        );
        let tokens = Sequence::Tokens {
            vocab: 2,
            ids: vec![0, 1],
        };
        assert_eq!(f.featurize(&tokens, &[]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn concat_static_length() {
        let f = Featurizer::new(FeaturizerMode::MeanPoolConcatStatic, 4, 3);
        let seq = Sequence::Tokens {
            vocab: 4,
            ids: vec![0, 0, 3, 1],
        };
        let out = f.featurize(&seq, &[9.0, 8.0, 7.0]).unwrap();
        assert_eq!(out.len(), 7);
        assert_eq!(out, vec![0.5, 0.25, 0.0, 0.25, 9.0, 8.0, 7.0]);
        assert!(f.featurize(&seq, &[1.0]).is_err());
    }

    #[test]
    fn width_mismatch() {
        let f = Featurizer::new(FeaturizerMode::MeanPool, 3, 0);
        assert!(f.featurize(&rows(2, vec![1.0, 2.0]), &[]).is_err());
        assert!(f.featurize(&Sequence::Tokens { vocab: 3, ids: vec![] }, &[]).is_err());
        assert!(f.featurize(&Sequence::Tokens { vocab: 3, ids: vec![5] }, &[]).is_err());
    }

    #[test]
    fn scale_keeps_zeros() {
        let f = Featurizer::new(FeaturizerMode::MeanPool, 2, 0);
        let samples: Vec<_> = [vec![0u32, 0], vec![1, 1], vec![0, 1]]
            .into_iter()
            .map(|ids| SupervisedSample {
                sequence: Sequence::Tokens { vocab: 2, ids },
                static_features: vec![],
                label: 0,
            })
            .collect();
        let f = f.fit_scale(&samples).unwrap();
        let out = f.featurize(&samples[0].sequence, &[]).unwrap();
        assert_eq!(out[1], 0.0);
        assert!(out[0] > 1.0);
    }
}
