use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::{AttentionNorm, BackboneConfig};
use crate::error::{Error, Result};

/// How trajectory features enter the interaction head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Gating and cross-attention, `7d` head input.
    #[default]
    Attention,
    /// Raw trajectory features appended, `7d` head input.
    Concat,
    /// Interaction features only, `5d` head input.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CrossAttentionMode {
    /// One softmax across both trajectory scores.
    #[default]
    Joint,
    /// A softmax per trajectory over its single score; always 1.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Feature transfer from the frozen trajectory extractor.
    pub ft: bool,
    /// Auxiliary trajectory task.
    pub mt: bool,
    /// Adaptive task weighting; `false` sums the two losses.
    pub aw: bool,
    pub fusion_mode: FusionMode,
    pub cross_attention: CrossAttentionMode,
    pub attention_norm: AttentionNorm,
    pub threshold: f64,
    /// Epochs for trajectory-extractor pretraining.
    pub pretrain_epochs: usize,
    pub pretrain_lr: Option<f64>,
    pub backbone: BackboneConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            weight_decay: 0.01,
            batch_size: 16,
            max_epochs: 10,
            patience: 3,
            seed: 42,
            ft: true,
            mt: true,
            aw: true,
            fusion_mode: FusionMode::Attention,
            cross_attention: CrossAttentionMode::Joint,
            attention_norm: AttentionNorm::Softmax,
            threshold: 0.5,
            pretrain_epochs: 5,
            pretrain_lr: None,
            backbone: BackboneConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if !(self.lr > 0.0) {
            return bad("lr");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs");
        }
        if self.backbone.hidden_size == 0 {
            return bad("backbone.hidden_size");
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Fusion actually used: without feature transfer there is nothing to fuse.
    pub fn effective_fusion(&self) -> FusionMode {
        if self.ft {
            self.fusion_mode
        } else {
            FusionMode::Off
        }
    }

    /// Short stable hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}
