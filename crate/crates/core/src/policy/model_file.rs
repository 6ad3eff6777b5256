//! Text serialization of trained models. Parameters are written with 17
//! significant digits, so a write/read cycle is bit-exact.

use std::path::Path;

use super::{Architecture, Featurizer, FeaturizerMode, LossModel, Network, PolicyBody, SoftmaxPolicy};
use crate::document::{Document, NOT_APPLICABLE};
use crate::error::{Error, Result};

pub const MODEL_TITLE: &str = "blbf model";

#[derive(Debug, Clone, PartialEq)]
pub enum StoredModel {
    Policy(SoftmaxPolicy),
    Loss(LossModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: StoredModel,
    pub featurizer: Option<Featurizer>,
    pub seed: u64,
    /// Free-form provenance entries written to the `[meta]` section.
    pub meta: Vec<(String, String)>,
}

impl ModelFile {
    pub fn policy(policy: SoftmaxPolicy, featurizer: Option<Featurizer>, seed: u64) -> Self {
        Self {
            model: StoredModel::Policy(policy),
            featurizer,
            seed,
            meta: Vec::new(),
        }
    }

    pub fn into_policy(self) -> Result<SoftmaxPolicy> {
        match self.model {
            StoredModel::Policy(p) => Ok(p),
            StoredModel::Loss(_) => Err(Error::Format("expected a policy, found a loss model".into())),
        }
    }

    pub fn into_loss_model(self) -> Result<LossModel> {
        match self.model {
            StoredModel::Loss(m) => Ok(m),
            StoredModel::Policy(_) => Err(Error::Format("expected a loss model, found a policy".into())),
        }
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::new(MODEL_TITLE);
        if !self.meta.is_empty() {
            let meta = doc.section("meta");
            for (k, v) in &self.meta {
                meta.set(k.clone(), v.clone());
            }
        }
        let s = doc.section("model");
        s.set("seed", self.seed.to_string());
        match &self.model {
            StoredModel::Policy(p) => match p.body() {
                PolicyBody::Network(net) => {
                    s.set("kind", "softmax");
                    write_network(s, net);
                    s.set("n_actions", p.n_actions().to_string());
                }
                PolicyBody::PointMass { input_dim, action } => {
                    s.set("kind", "point-mass");
                    s.set("input_dim", input_dim.to_string());
                    s.set("n_actions", p.n_actions().to_string());
                    s.set("action", action.to_string());
                }
            },
            StoredModel::Loss(m) => {
                s.set("kind", "loss-model");
                write_network(s, m.network());
                s.set("n_actions", m.n_actions().to_string());
                let (lo, hi) = m.range();
                s.set_f64("loss_lo", lo).set_f64("loss_hi", hi);
            }
        }
        if let Some(f) = &self.featurizer {
            let s = doc.section("featurizer");
            s.set("mode", f.mode().name())
                .set("token_width", f.token_width().to_string())
                .set("static_width", f.static_width().to_string());
            match f.scale() {
                Some(scale) => s.set_f64_list("scale", scale),
                None => s.set("scale", NOT_APPLICABLE),
            };
        }
        doc
    }

    pub fn from_document(doc: &Document) -> Result<Self> {
        if doc.title != MODEL_TITLE {
            return Err(Error::Format(format!("not a model file (title `{}`)", doc.title)));
        }
        let s = doc.require_section("model")?;
        let seed = s.require_u64("seed")?;
        let n_actions = s.require_usize("n_actions")?;
        let model = match s.require("kind")? {
            "softmax" => StoredModel::Policy(SoftmaxPolicy::from_network(read_network(s, n_actions)?)),
            "point-mass" => StoredModel::Policy(SoftmaxPolicy::point_mass(
                s.require_usize("input_dim")?,
                n_actions,
                s.require_usize("action")?,
            )?),
            "loss-model" => StoredModel::Loss(LossModel::new(
                read_network(s, 1)?,
                n_actions,
                s.require_f64("loss_lo")?,
                s.require_f64("loss_hi")?,
            )?),
            other => return Err(Error::Format(format!("unknown model kind `{other}`"))),
        };
        let featurizer = match doc.get_section("featurizer") {
            None => None,
            Some(f) => {
                let feat = Featurizer::new(
                    FeaturizerMode::parse(f.require("mode")?)?,
                    f.require_usize("token_width")?,
                    f.require_usize("static_width")?,
                );
                Some(match f.require("scale")? {
                    NOT_APPLICABLE => feat,
                    _ => feat.with_scale(f.require_f64_list("scale")?)?,
                })
            }
        };
        let meta = doc.get_section("meta").map(|m| m.entries.clone()).unwrap_or_default();
        Ok(Self {
            model,
            featurizer,
            seed,
            meta,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_document().write_atomic(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_document(&Document::read(path)?)
    }
}

fn write_network(s: &mut crate::document::Section, net: &Network) {
    s.set("input_dim", net.input_dim().to_string())
        .set("arch", net.arch().name())
        .set("param_count", net.params().len().to_string())
        .set_f64_list("params", net.params());
}

fn read_network(s: &crate::document::Section, n_out: usize) -> Result<Network> {
    let params = s.require_f64_list("params")?;
    let declared = s.require_usize("param_count")?;
    if declared != params.len() {
        return Err(Error::LengthMismatch {
            what: "params",
            expected: declared,
            actual: params.len(),
        });
    }
    Network::from_params(
        s.require_usize("input_dim")?,
        Architecture::parse(s.require("arch")?)?,
        n_out,
        params,
    )
}
