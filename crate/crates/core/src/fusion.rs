//! Feature transfer from a frozen trajectory extractor into the interaction
//! classifier: gating, cross-attention and fusion by concatenation.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{ArBert, BackboneConfig, Linear, PreparedInput};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sigmoid, softmax, softmax_backward, Matrix};
use crate::params::{self, join, zeroed, Params};
use crate::train::config::{CrossAttentionMode, TrainConfig};
use crate::train::loss::{bce_logit_grad, bce_single};
use crate::train::optim::AdamW;

/// Gate and gated output for one trajectory vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Gated {
    pub gate: Vec<f64>,
    pub output: Vec<f64>,
}

/// `σ(W_gate·h) ⊙ h`
pub fn gate_features(h: &[f64], w_gate: &Matrix) -> Result<Gated> {
    if w_gate.cols != h.len() || w_gate.rows != h.len() {
        return Err(Error::DimensionMismatch {
            expected: w_gate.cols,
            actual: h.len(),
        });
    }
    let gate: Vec<f64> = w_gate.matvec(h).into_iter().map(sigmoid).collect();
    let output = gate.iter().zip(h).map(|(g, x)| g * x).collect();
    Ok(Gated { gate, output })
}

/// Accumulates `∂L/∂W_gate`. The input comes from the frozen extractor and
/// receives no gradient.
pub fn gate_backward(h: &[f64], gated: &Gated, d_out: &[f64], grad_w_gate: &mut Matrix) {
    let dz: Vec<f64> = d_out
        .iter()
        .zip(h)
        .zip(&gated.gate)
        .map(|((g, x), s)| g * x * s * (1.0 - s))
        .collect();
    grad_w_gate.add_outer(1.0, &dz, h);
}

/// Query, scores, attention weights and attended outputs for the two
/// trajectory branches.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossAttention {
    pub query: Vec<f64>,
    pub scores: [f64; 2],
    pub alpha: [f64; 2],
    pub outputs: [Vec<f64>; 2],
}

/// `Q = W_Q·H_inter`, `s_i = Q·g_i / d`, `h_i^a = α_i·g_i`.
///
/// In joint mode `α = softmax(s_1, s_2)`; in literal mode each branch is
/// normalised on its own, which always gives `α_i = 1`.
pub fn cross_attend(
    h_inter: &[f64],
    g1: &[f64],
    g2: &[f64],
    w_q: &Matrix,
    mode: CrossAttentionMode,
) -> Result<CrossAttention> {
    let d = g1.len();
    if w_q.cols != h_inter.len() {
        return Err(Error::DimensionMismatch {
            expected: w_q.cols,
            actual: h_inter.len(),
        });
    }
    if w_q.rows != d || g2.len() != d {
        return Err(Error::DimensionMismatch {
            expected: w_q.rows,
            actual: d,
        });
    }
    let query = w_q.matvec(h_inter);
    let scores = [dot(&query, g1) / d as f64, dot(&query, g2) / d as f64];
    Ok(attend_with_scores(query, scores, g1, g2, mode))
}

/// Attention given precomputed scores; exposed so the softmax limit can be
/// exercised with synthetic scores.
pub fn attend_with_scores(
    query: Vec<f64>,
    scores: [f64; 2],
    g1: &[f64],
    g2: &[f64],
    mode: CrossAttentionMode,
) -> CrossAttention {
    let alpha = match mode {
        CrossAttentionMode::Joint => {
            let a = softmax(&scores);
            [a[0], a[1]]
        }
        CrossAttentionMode::Literal => [1.0, 1.0],
    };
    let scale = |a: f64, g: &[f64]| g.iter().map(|x| a * x).collect::<Vec<f64>>();
    CrossAttention {
        query,
        scores,
        outputs: [scale(alpha[0], g1), scale(alpha[1], g2)],
        alpha,
    }
}

/// Gradients flowing out of the cross-attention block.
pub struct CrossAttentionGrads {
    pub d_h_inter: Vec<f64>,
    pub d_g: [Vec<f64>; 2],
}

pub fn cross_attend_backward(
    ca: &CrossAttention,
    h_inter: &[f64],
    g: [&[f64]; 2],
    w_q: &Matrix,
    d_out: [&[f64]; 2],
    mode: CrossAttentionMode,
    grad_w_q: &mut Matrix,
) -> CrossAttentionGrads {
    let d = g[0].len() as f64;
    let mut d_g = [
        d_out[0].iter().map(|v| v * ca.alpha[0]).collect::<Vec<f64>>(),
        d_out[1].iter().map(|v| v * ca.alpha[1]).collect::<Vec<f64>>(),
    ];
    let mut d_h_inter = vec![0.0; h_inter.len()];
    if mode == CrossAttentionMode::Joint {
        let d_alpha = [dot(d_out[0], g[0]), dot(d_out[1], g[1])];
        let ds = softmax_backward(&ca.alpha, &d_alpha);
        let mut dq = vec![0.0; ca.query.len()];
        for i in 0..2 {
            axpy(&mut dq, ds[i] / d, g[i]);
            axpy(&mut d_g[i], ds[i] / d, &ca.query);
        }
        grad_w_q.add_outer(1.0, &dq, h_inter);
        d_h_inter = w_q.matvec_t(&dq);
    }
    CrossAttentionGrads { d_h_inter, d_g }
}

/// `concat(H_inter, h1, h2)`; `H_inter` must be five times as long as each
/// trajectory vector.
pub fn fuse(h_inter: &[f64], h1: &[f64], h2: &[f64]) -> Result<Vec<f64>> {
    let d = h1.len();
    if h2.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: h2.len(),
        });
    }
    if h_inter.len() != 5 * d {
        return Err(Error::DimensionMismatch {
            expected: 5 * d,
            actual: h_inter.len(),
        });
    }
    let mut out = Vec::with_capacity(7 * d);
    out.extend_from_slice(h_inter);
    out.extend_from_slice(h1);
    out.extend_from_slice(h2);
    Ok(out)
}

/// Two-layer perceptron `4d → d → d` with a tanh between the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub first: Linear,
    pub second: Linear,
}

impl Mlp {
    fn new(hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            first: Linear::new(4 * hidden, hidden, rng),
            second: Linear::new(hidden, hidden, rng),
        }
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a: Vec<f64> = self.first.forward(x).into_iter().map(f64::tanh).collect();
        let y = self.second.forward(&a);
        (a, y)
    }

    fn backward(&self, x: &[f64], a: &[f64], dy: &[f64], grad: &mut Mlp) -> Vec<f64> {
        let da = self.second.backward(a, dy, &mut grad.second);
        let dz: Vec<f64> = da.iter().zip(a).map(|(g, v)| g * (1.0 - v * v)).collect();
        self.first.backward(x, &dz, &mut grad.first)
    }
}

impl Params for Mlp {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.first.visit(&join(prefix, "first"), f);
        self.second.visit(&join(prefix, "second"), f);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.first.visit_mut(&join(prefix, "first"), f);
        self.second.visit_mut(&join(prefix, "second"), f);
    }
}

/// Encoder plus projection head trained on trajectory labels, then frozen.
/// It exposes no mutable access to its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTrajectoryExtractor {
    encoder: ArBert,
    mlp: Mlp,
    backbone: BackboneConfig,
    config_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExtractorFile {
    format: String,
    backbone: BackboneConfig,
    attention_norm: crate::encoder::AttentionNorm,
    config_hash: String,
    params: BTreeMap<String, String>,
}

const EXTRACTOR_FORMAT: &str = "falcon-trajectory-extractor/1";

/// Trainable view used only during pretraining.
#[derive(Debug, Clone)]
struct PretrainModel {
    encoder: ArBert,
    mlp: Mlp,
    head: Matrix,
}

impl Params for PretrainModel {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.encoder.visit(&join(prefix, "encoder"), f);
        self.mlp.visit(&join(prefix, "mlp"), f);
        f(&join(prefix, "head"), &self.head.data);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.encoder.visit_mut(&join(prefix, "encoder"), f);
        self.mlp.visit_mut(&join(prefix, "mlp"), f);
        f(&join(prefix, "head"), &mut self.head.data);
    }
}

struct Frozen<'a>(&'a FrozenTrajectoryExtractor);

impl Params for Frozen<'_> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.0.encoder.visit(&join(prefix, "encoder"), f);
        self.0.mlp.visit(&join(prefix, "mlp"), f);
    }
    fn visit_mut(&mut self, _: &str, _: &mut dyn FnMut(&str, &mut [f64])) {
        unreachable!("frozen extractor parameters are read-only")
    }
}

impl FrozenTrajectoryExtractor {
    pub fn hidden_size(&self) -> usize {
        self.encoder.hidden
    }

    pub fn backbone(&self) -> &BackboneConfig {
        &self.backbone
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Trajectory feature `MLP(encoder(input)) ∈ R^d`.
    pub fn forward(&self, input: &PreparedInput) -> Result<Vec<f64>> {
        if input.entities.len() != 3 {
            return Err(Error::InvalidInput(
                "trajectory extractor expects (Person, Time, Location)".into(),
            ));
        }
        let enc = self.encoder.forward(input)?;
        Ok(self.mlp.forward(&enc.features).1)
    }

    /// SHA-256 over all parameters.
    pub fn checksum(&self) -> String {
        params::checksum(&Frozen(self))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&self.to_file())?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&serde_json::from_str(&s)?)
    }

    pub(crate) fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("extractor serializes")
    }

    fn to_file(&self) -> ExtractorFile {
        ExtractorFile {
            format: EXTRACTOR_FORMAT.into(),
            backbone: self.backbone.clone(),
            attention_norm: self.encoder.norm,
            config_hash: self.config_hash.clone(),
            params: params::to_blobs(&Frozen(self)),
        }
    }

    pub(crate) fn from_json(v: &serde_json::Value) -> Result<Self> {
        let file: ExtractorFile = serde_json::from_value(v.clone())?;
        if file.format != EXTRACTOR_FORMAT {
            return Err(Error::CheckpointMismatch(format!(
                "unexpected extractor format `{}`",
                file.format
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = file.backbone.hidden_size;
        let mut model = PretrainModel {
            encoder: ArBert::new(d, file.attention_norm, &mut rng),
            mlp: Mlp::new(d, &mut rng),
            head: Matrix::zeros(0, 0),
        };
        // the head is not persisted
        let mut blobs = file.params.clone();
        blobs.insert("head".into(), String::new());
        params::from_blobs(&mut model, &blobs)?;
        Ok(Self {
            encoder: model.encoder,
            mlp: model.mlp,
            backbone: file.backbone,
            config_hash: file.config_hash,
        })
    }

    /// Refuses extractors built for a different backbone width.
    pub fn check_compatible(&self, backbone: &BackboneConfig) -> Result<()> {
        if self.backbone.hidden_size != backbone.hidden_size || self.backbone.name != backbone.name {
            return Err(Error::CheckpointMismatch(format!(
                "extractor built for {} d={}, model uses {} d={}",
                self.backbone.name, self.backbone.hidden_size, backbone.name, backbone.hidden_size
            )));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss of a pretraining run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainLog {
    pub epoch_losses: Vec<f64>,
}

/// Trains an encoder and projection head on labelled trajectory inputs
/// with cross-entropy, then freezes them.
pub fn pretrain_trajectory_extractor(
    corpus: &[(PreparedInput, u8)],
    cfg: &TrainConfig,
) -> Result<(FrozenTrajectoryExtractor, PretrainLog)> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty trajectory corpus".into()));
    }
    let d = cfg.backbone.hidden_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7472_616a);
    let mut model = PretrainModel {
        encoder: ArBert::new(d, cfg.attention_norm, &mut rng),
        mlp: Mlp::new(d, &mut rng),
        head: Matrix::glorot(2, d, &mut rng),
    };
    let mut opt = AdamW::new(cfg.pretrain_lr.unwrap_or(cfg.lr), cfg.weight_decay);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut log = PretrainLog {
        epoch_losses: Vec::new(),
    };
    for epoch in 0..cfg.pretrain_epochs.max(1) {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = zeroed(&model);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (input, y) = &corpus[i];
                let enc = model.encoder.forward(input)?;
                let (a, feat) = model.mlp.forward(&enc.features);
                let p = softmax(&model.head.matvec(&feat))[1];
                total += bce_single(p, *y);
                let g = bce_logit_grad(p, *y) * scale;
                let dz = [-g, g];
                grad.head.add_outer(1.0, &dz, &feat);
                let dfeat = model.head.matvec_t(&dz);
                let denc = model.mlp.backward(&enc.features, &a, &dfeat, &mut grad.mlp);
                model.encoder.backward(&enc.cache, &denc, &mut grad.encoder);
            }
            opt.step(&mut model, &grad);
        }
        let mean = total / corpus.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: opt.steps() as usize,
                detail: "trajectory pretraining loss is not finite".into(),
            });
        }
        log::info!("pretrain epoch {epoch}: loss {mean:.6}");
        log.epoch_losses.push(mean);
    }
    Ok((
        FrozenTrajectoryExtractor {
            encoder: model.encoder,
            mlp: model.mlp,
            backbone: cfg.backbone.clone(),
            config_hash: cfg.hash(),
        },
        log,
    ))
}
