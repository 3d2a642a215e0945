use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EntityMention, Role};
use crate::linalg::{axpy, dot, softmax, softmax_backward, Matrix};
use crate::params::{join, Params};

use super::backbone::EncoderBackbone;
use super::markers::insert_markers;

/// How occurrence scores become weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttentionNorm {
    /// Normalized exponential of the scores.
    #[default]
    Softmax,
    /// Scores divided by their sum; undefined when the sum is zero.
    Literal,
}

/// Mean of hidden rows `c..=d`.
pub fn pool_occurrence(hidden: &Matrix, (c, d): (usize, usize)) -> Result<Vec<f64>> {
    if c > d || d >= hidden.rows {
        return Err(Error::SpanOutOfRange {
            start: c,
            end: d,
            len: hidden.rows,
        });
    }
    let mut out = vec![0.0; hidden.cols];
    let n = (d - c + 1) as f64;
    for t in c..=d {
        axpy(&mut out, 1.0 / n, hidden.row(t));
    }
    Ok(out)
}

/// Per-occurrence vectors, their scores and weights, and the weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityFeature {
    pub occurrences: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub aggregated: Vec<f64>,
}

/// Scores each occurrence with `tanh(w·h + b)`, normalizes the scores into
/// weights and returns the weighted sum of the occurrence vectors.
pub fn aggregate_occurrences(
    occurrences: Vec<Vec<f64>>,
    attn_w: &[f64],
    attn_b: f64,
    norm: AttentionNorm,
) -> Result<EntityFeature> {
    if occurrences.is_empty() {
        return Err(Error::InvalidInput("entity has no occurrence vectors".into()));
    }
    let d = attn_w.len();
    let scores: Vec<f64> = occurrences
        .iter()
        .map(|h| {
            if h.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: h.len(),
                });
            }
            Ok((dot(attn_w, h) + attn_b).tanh())
        })
        .collect::<Result<_>>()?;
    let weights = match norm {
        AttentionNorm::Softmax => softmax(&scores),
        AttentionNorm::Literal => {
            let sum: f64 = scores.iter().sum();
            if sum == 0.0 || !sum.is_finite() {
                return Err(Error::InvalidInput(
                    "literal attention weights undefined: scores sum to zero".into(),
                ));
            }
            scores.iter().map(|w| w / sum).collect()
        }
    };
    let mut aggregated = vec![0.0; d];
    for (h, w) in occurrences.iter().zip(&weights) {
        axpy(&mut aggregated, *w, h);
    }
    Ok(EntityFeature {
        occurrences,
        scores,
        weights,
        aggregated,
    })
}

/// Gradients of the attention parameters given `d_agg = ∂L/∂aggregated`.
/// Occurrence vectors come from the frozen backbone and get no gradient.
pub fn aggregate_backward(
    feat: &EntityFeature,
    d_agg: &[f64],
    norm: AttentionNorm,
    grad_w: &mut [f64],
    grad_b: &mut f64,
) {
    let d_weights: Vec<f64> = feat.occurrences.iter().map(|h| dot(d_agg, h)).collect();
    let d_scores = match norm {
        AttentionNorm::Softmax => softmax_backward(&feat.weights, &d_weights),
        AttentionNorm::Literal => {
            let sum: f64 = feat.scores.iter().sum();
            let inner = dot(&feat.weights, &d_weights);
            d_weights.iter().map(|g| (g - inner) / sum).collect()
        }
    };
    for ((h, s), ds) in feat.occurrences.iter().zip(&feat.scores).zip(d_scores) {
        let dz = ds * (1.0 - s * s);
        axpy(grad_w, dz, h);
        *grad_b += dz;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            weight: Matrix::glorot(outputs, inputs, rng),
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weight.matvec(x);
        axpy(&mut y, 1.0, &self.bias);
        y
    }

    /// Accumulates parameter gradients into `grad`, returns `∂L/∂x`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        grad.weight.add_outer(1.0, dy, x);
        axpy(&mut grad.bias, 1.0, dy);
        self.weight.matvec_t(dy)
    }
}

impl Params for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&join(prefix, "weight"), &self.weight.data);
        f(&join(prefix, "bias"), &self.bias);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "weight"), &mut self.weight.data);
        f(&join(prefix, "bias"), &mut self.bias);
    }
}

/// Backbone output reduced to what the trainable layers need: the `[CLS]`
/// row and, per entity, one mean-pooled vector per occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInput {
    pub cls: Vec<f64>,
    pub entities: Vec<(Role, Vec<Vec<f64>>)>,
}

impl PreparedInput {
    pub fn slots(&self) -> usize {
        self.entities.len() + 1
    }
}

const QUAD_ROLES: [Role; 4] = [Role::Person1, Role::Person2, Role::Time, Role::Location];
const TRIPLE_ROLES: [Role; 3] = [Role::Person, Role::Time, Role::Location];

fn check_roles(entities: &[&EntityMention]) -> Result<()> {
    let roles: Vec<Role> = entities.iter().map(|e| e.role).collect();
    if roles == QUAD_ROLES || roles == TRIPLE_ROLES {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "entities must be (Person1, Person2, Time, Location) or (Person, Time, Location), got {roles:?}"
        )))
    }
}

/// Marks, encodes and pools one `(segment, entities)` input.
pub fn prepare(
    backbone: &dyn EncoderBackbone,
    segment_text: &str,
    entities: &[&EntityMention],
) -> Result<PreparedInput> {
    check_roles(entities)?;
    let marked = insert_markers(segment_text, entities, backbone)?;
    let hidden = backbone.forward(&marked.tokens);
    let mut out = Vec::with_capacity(entities.len());
    for (ent, spans) in entities.iter().zip(&marked.entity_spans) {
        let occ = spans
            .iter()
            .map(|&s| pool_occurrence(&hidden, s))
            .collect::<Result<Vec<_>>>()?;
        out.push((ent.role, occ));
    }
    Ok(PreparedInput {
        cls: hidden.row(marked.cls_position).to_vec(),
        entities: out,
    })
}

fn role_index(role: Role) -> usize {
    match role {
        Role::Person1 => 0,
        Role::Person2 => 1,
        Role::Person => 2,
        Role::Time => 3,
        Role::Location => 4,
    }
}

/// Attention-aggregating entity-marker encoder. Produces
/// `concat(W0·tanh(H_cls)+b0, W_i·tanh(H_i)+b_i, ...)` with one projection
/// per role.
#[derive(Debug, Clone, PartialEq)]
pub struct ArBert {
    pub hidden: usize,
    pub attn_w: Vec<f64>,
    pub attn_b: Vec<f64>,
    pub cls_proj: Linear,
    /// Indexed Person1, Person2, Person, Time, Location.
    pub role_proj: Vec<Linear>,
    pub norm: AttentionNorm,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    cls_tanh: Vec<f64>,
    entities: Vec<(Role, EntityFeature, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    /// `(n+1)·d` feature vector.
    pub features: Vec<f64>,
    pub cache: EncodeCache,
}

impl Encoded {
    pub fn entity_features(&self) -> impl Iterator<Item = &EntityFeature> {
        self.cache.entities.iter().map(|(_, f, _)| f)
    }
}

impl ArBert {
    pub fn new<R: Rng>(hidden: usize, norm: AttentionNorm, rng: &mut R) -> Self {
        let limit = (3.0 / hidden as f64).sqrt();
        Self {
            hidden,
            attn_w: (0..hidden).map(|_| rng.gen_range(-limit..limit)).collect(),
            attn_b: vec![0.0],
            cls_proj: Linear::new(hidden, hidden, rng),
            role_proj: (0..5).map(|_| Linear::new(hidden, hidden, rng)).collect(),
            norm,
        }
    }

    pub fn forward(&self, input: &PreparedInput) -> Result<Encoded> {
        let d = self.hidden;
        if input.cls.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: input.cls.len(),
            });
        }
        let mut features = Vec::with_capacity(input.slots() * d);
        let cls_tanh: Vec<f64> = input.cls.iter().map(|v| v.tanh()).collect();
        features.extend(self.cls_proj.forward(&cls_tanh));
        let mut entities = Vec::with_capacity(input.entities.len());
        for (role, occ) in &input.entities {
            let feat = aggregate_occurrences(occ.clone(), &self.attn_w, self.attn_b[0], self.norm)?;
            let t: Vec<f64> = feat.aggregated.iter().map(|v| v.tanh()).collect();
            features.extend(self.role_proj[role_index(*role)].forward(&t));
            entities.push((*role, feat, t));
        }
        Ok(Encoded {
            features,
            cache: EncodeCache { cls_tanh, entities },
        })
    }

    /// Accumulates `∂L/∂θ` into `grad` given `d_features = ∂L/∂H′`.
    pub fn backward(&self, cache: &EncodeCache, d_features: &[f64], grad: &mut ArBert) {
        let d = self.hidden;
        self.cls_proj
            .backward(&cache.cls_tanh, &d_features[..d], &mut grad.cls_proj);
        for (slot, (role, feat, t)) in cache.entities.iter().enumerate() {
            let dy = &d_features[(slot + 1) * d..(slot + 2) * d];
            let ri = role_index(*role);
            let dt = self.role_proj[ri].backward(t, dy, &mut grad.role_proj[ri]);
            let d_agg: Vec<f64> = dt.iter().zip(t).map(|(g, tv)| g * (1.0 - tv * tv)).collect();
            aggregate_backward(feat, &d_agg, self.norm, &mut grad.attn_w, &mut grad.attn_b[0]);
        }
    }
}

impl Params for ArBert {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&join(prefix, "attn_w"), &self.attn_w);
        f(&join(prefix, "attn_b"), &self.attn_b);
        self.cls_proj.visit(&join(prefix, "cls_proj"), f);
        for (i, p) in self.role_proj.iter().enumerate() {
            p.visit(&join(prefix, &format!("role_proj{i}")), f);
        }
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "attn_w"), &mut self.attn_w);
        f(&join(prefix, "attn_b"), &mut self.attn_b);
        self.cls_proj.visit_mut(&join(prefix, "cls_proj"), f);
        for (i, p) in self.role_proj.iter_mut().enumerate() {
            p.visit_mut(&join(prefix, &format!("role_proj{i}")), f);
        }
    }
}
