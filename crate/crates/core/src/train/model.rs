use rand::Rng;

use crate::dataset::LabeledExample;
use crate::encoder::{prepare, ArBert, EncoderBackbone, Encoded, PreparedInput};
use crate::error::{Error, Result};
use crate::fusion::{
    cross_attend, cross_attend_backward, fuse, gate_backward, gate_features, CrossAttention,
    FrozenTrajectoryExtractor, Gated,
};
use crate::ingest::CandidateQuadruple;
use crate::linalg::{axpy, softmax, Matrix};
use crate::params::{join, Params};
use crate::train::config::{CrossAttentionMode, FusionMode, TrainConfig};
use crate::train::loss::{bce_logit_grad, bce_single, MultitaskLoss, Objective};

/// Backbone-side work for one candidate, done once since the backbone and
/// the trajectory extractor are both frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCandidate {
    pub quad: PreparedInput,
    pub tra: [PreparedInput; 2],
    /// Frozen trajectory features `h₁ᵗ, h₂ᵗ`, present when transfer is on.
    pub transfer: Option<[Vec<f64>; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub input: PreparedCandidate,
    pub y_inter: u8,
    pub y_tra: [u8; 2],
}

pub fn prepare_candidate(
    backbone: &dyn EncoderBackbone,
    candidate: &CandidateQuadruple,
    extractor: Option<&FrozenTrajectoryExtractor>,
) -> Result<PreparedCandidate> {
    let text = &candidate.segment.text;
    let quad = prepare(backbone, text, &candidate.entities())?;
    let (t1, t2) = candidate.split();
    let tra = [prepare(backbone, text, &t1.entities())?, prepare(backbone, text, &t2.entities())?];
    let transfer = match extractor {
        Some(e) => Some([e.forward(&tra[0])?, e.forward(&tra[1])?]),
        None => None,
    };
    Ok(PreparedCandidate { quad, tra, transfer })
}

pub fn prepare_example(
    backbone: &dyn EncoderBackbone,
    example: &LabeledExample,
    extractor: Option<&FrozenTrajectoryExtractor>,
) -> Result<TrainingExample> {
    Ok(TrainingExample {
        input: prepare_candidate(backbone, &example.candidate, extractor)?,
        y_inter: example.y_inter,
        y_tra: [example.y_tra1, example.y_tra2],
    })
}

/// Trainable part of the interaction classifier: shared encoder, transfer
/// block, the two softmax heads and the task-weighting scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct FalconModel {
    pub hidden: usize,
    pub fusion: FusionMode,
    pub cross_attention: CrossAttentionMode,
    pub objective: Objective,
    pub encoder: ArBert,
    /// `d×d`; empty unless fusion mode is attention.
    pub w_gate: Matrix,
    /// `d×5d`; empty unless fusion mode is attention.
    pub w_q: Matrix,
    /// `2×7d`, or `2×5d` without fusion.
    pub w_inter: Matrix,
    /// `2×4d`, shared by both trajectory branches.
    pub w_tra: Matrix,
    /// `[c₁, c₂]`
    pub task_weights: Vec<f64>,
}

impl Params for FalconModel {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.encoder.visit(&join(prefix, "encoder"), f);
        f(&join(prefix, "w_gate"), &self.w_gate.data);
        f(&join(prefix, "w_q"), &self.w_q.data);
        f(&join(prefix, "w_inter"), &self.w_inter.data);
        f(&join(prefix, "w_tra"), &self.w_tra.data);
        f(&join(prefix, "task_weights"), &self.task_weights);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.encoder.visit_mut(&join(prefix, "encoder"), f);
        f(&join(prefix, "w_gate"), &mut self.w_gate.data);
        f(&join(prefix, "w_q"), &mut self.w_q.data);
        f(&join(prefix, "w_inter"), &mut self.w_inter.data);
        f(&join(prefix, "w_tra"), &mut self.w_tra.data);
        f(&join(prefix, "task_weights"), &mut self.task_weights);
    }
}

/// Forward values of one candidate kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub p_inter: f64,
    pub fused: Vec<f64>,
    quad: Encoded,
    gated: Option<[Gated; 2]>,
    attention: Option<CrossAttention>,
}

impl Forward {
    pub fn attention(&self) -> Option<&CrossAttention> {
        self.attention.as_ref()
    }
}

/// Losses of one batch, before and after task weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub l_inter: f64,
    /// `None` when the trajectory task is not part of the objective.
    pub l_tra: Option<f64>,
    pub combined: MultitaskLoss,
}

impl FalconModel {
    pub fn new<R: Rng>(cfg: &TrainConfig, rng: &mut R) -> Self {
        let d = cfg.backbone.hidden_size;
        let fusion = cfg.effective_fusion();
        let encoder = ArBert::new(d, cfg.attention_norm, rng);
        let (w_gate, w_q) = if fusion == FusionMode::Attention {
            (Matrix::glorot(d, d, rng), Matrix::glorot(d, 5 * d, rng))
        } else {
            (Matrix::zeros(0, 0), Matrix::zeros(0, 0))
        };
        let head_in = if fusion == FusionMode::Off { 5 * d } else { 7 * d };
        Self {
            hidden: d,
            fusion,
            cross_attention: cfg.cross_attention,
            objective: objective(cfg),
            encoder,
            w_gate,
            w_q,
            w_inter: Matrix::glorot(2, head_in, rng),
            w_tra: Matrix::glorot(2, 4 * d, rng),
            task_weights: vec![1.0, 1.0],
        }
    }

    /// Input width of the interaction head.
    pub fn head_input(&self) -> usize {
        self.w_inter.cols
    }

    fn transfer<'a>(&self, input: &'a PreparedCandidate) -> Result<&'a [Vec<f64>; 2]> {
        input.transfer.as_ref().ok_or_else(|| {
            Error::InvalidInput("feature transfer is enabled but no trajectory features were prepared".into())
        })
    }

    pub fn forward(&self, input: &PreparedCandidate) -> Result<Forward> {
        if input.quad.entities.len() != 4 {
            return Err(Error::InvalidInput("interaction input needs four entities".into()));
        }
        let quad = self.encoder.forward(&input.quad)?;
        let (fused, gated, attention) = match self.fusion {
            FusionMode::Off => (quad.features.clone(), None, None),
            FusionMode::Concat => {
                let [h1, h2] = self.transfer(input)?;
                (fuse(&quad.features, h1, h2)?, None, None)
            }
            FusionMode::Attention => {
                let [h1, h2] = self.transfer(input)?;
                let g = [gate_features(h1, &self.w_gate)?, gate_features(h2, &self.w_gate)?];
                let ca = cross_attend(&quad.features, &g[0].output, &g[1].output, &self.w_q, self.cross_attention)?;
                let fused = fuse(&quad.features, &ca.outputs[0], &ca.outputs[1])?;
                (fused, Some(g), Some(ca))
            }
        };
        let p_inter = softmax(&self.w_inter.matvec(&fused))[1];
        Ok(Forward { p_inter, fused, quad, gated, attention })
    }

    /// Positive-class probability of the interaction head.
    pub fn predict_proba(&self, input: &PreparedCandidate) -> Result<f64> {
        Ok(self.forward(input)?.p_inter)
    }

    /// Positive-class probability of the trajectory head for one branch.
    pub fn trajectory_proba(&self, input: &PreparedInput) -> Result<(f64, Encoded)> {
        let enc = self.encoder.forward(input)?;
        Ok((softmax(&self.w_tra.matvec(&enc.features))[1], enc))
    }

    /// Mean losses of a batch and their gradients accumulated into `grad`.
    pub fn batch_gradient(&self, batch: &[&TrainingExample], grad: &mut FalconModel) -> Result<BatchLoss> {
        let j = batch.len() as f64;
        let mt = self.objective != Objective::MainOnly;
        let mut fwd = Vec::with_capacity(batch.len());
        let mut tra = Vec::with_capacity(batch.len());
        let (mut l_inter, mut l_tra) = (0.0, 0.0);
        for ex in batch {
            let f = self.forward(&ex.input)?;
            l_inter += bce_single(f.p_inter, ex.y_inter);
            fwd.push(f);
            if mt {
                let b1 = self.trajectory_proba(&ex.input.tra[0])?;
                let b2 = self.trajectory_proba(&ex.input.tra[1])?;
                l_tra += (bce_single(b1.0, ex.y_tra[0]) + bce_single(b2.0, ex.y_tra[1])) / 2.0;
                tra.push([b1, b2]);
            }
        }
        l_inter /= j;
        l_tra /= j;
        let combined = self.objective.combine(l_inter, l_tra, self.task_weights[0], self.task_weights[1]);
        grad.task_weights[0] += combined.d_c1;
        grad.task_weights[1] += combined.d_c2;
        for (i, ex) in batch.iter().enumerate() {
            let g = combined.d_inter * bce_logit_grad(fwd[i].p_inter, ex.y_inter) / j;
            self.backward_inter(&ex.input, &fwd[i], g, grad)?;
            if mt {
                for (b, (p, enc)) in tra[i].iter().enumerate() {
                    let g = combined.d_tra * bce_logit_grad(*p, ex.y_tra[b]) / (2.0 * j);
                    let dz = [-g, g];
                    grad.w_tra.add_outer(1.0, &dz, &enc.features);
                    let dh = self.w_tra.matvec_t(&dz);
                    self.encoder.backward(&enc.cache, &dh, &mut grad.encoder);
                }
            }
        }
        Ok(BatchLoss {
            l_inter,
            l_tra: mt.then_some(l_tra),
            combined,
        })
    }

    /// Backpropagates `∂L/∂z₁ = g` (and `−g` on `z₀`) through the interaction path.
    fn backward_inter(&self, input: &PreparedCandidate, f: &Forward, g: f64, grad: &mut FalconModel) -> Result<()> {
        let dz = [-g, g];
        grad.w_inter.add_outer(1.0, &dz, &f.fused);
        let dfused = self.w_inter.matvec_t(&dz);
        let five_d = 5 * self.hidden;
        let mut dh = dfused[..five_d].to_vec();
        if let (Some(gated), Some(ca)) = (&f.gated, &f.attention) {
            let [h1, h2] = self.transfer(input)?;
            let d = self.hidden;
            let back = cross_attend_backward(
                ca,
                &f.quad.features,
                [&gated[0].output, &gated[1].output],
                &self.w_q,
                [&dfused[five_d..five_d + d], &dfused[five_d + d..]],
                self.cross_attention,
                &mut grad.w_q,
            );
            axpy(&mut dh, 1.0, &back.d_h_inter);
            gate_backward(h1, &gated[0], &back.d_g[0], &mut grad.w_gate);
            gate_backward(h2, &gated[1], &back.d_g[1], &mut grad.w_gate);
        }
        self.encoder.backward(&f.quad.cache, &dh, &mut grad.encoder);
        Ok(())
    }

    /// Objective value of a batch without gradients.
    pub fn batch_loss(&self, batch: &[&TrainingExample]) -> Result<f64> {
        let mut scratch = crate::params::zeroed(self);
        Ok(self.batch_gradient(batch, &mut scratch)?.combined.total)
    }
}

pub(crate) fn objective(cfg: &TrainConfig) -> Objective {
    match (cfg.mt, cfg.aw) {
        (false, _) => Objective::MainOnly,
        (true, true) => Objective::Adaptive,
        (true, false) => Objective::UnitWeights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::AttentionNorm;
    use crate::gradcheck::{finite_difference, relative_error};
    use crate::params::zeroed;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn input(rng: &mut ChaCha8Rng, d: usize, roles: &[crate::ingest::Role]) -> PreparedInput {
        PreparedInput {
            cls: rvec(rng, d),
            entities: roles
                .iter()
                .map(|r| {
                    let n = rng.gen_range(1..4);
                    (*r, (0..n).map(|_| rvec(rng, d)).collect())
                })
                .collect(),
        }
    }

    fn example(rng: &mut ChaCha8Rng, d: usize, transfer: bool) -> TrainingExample {
        use crate::ingest::Role::*;
        TrainingExample {
            input: PreparedCandidate {
                quad: input(rng, d, &[Person1, Person2, Time, Location]),
                tra: [input(rng, d, &[Person, Time, Location]), input(rng, d, &[Person, Time, Location])],
                transfer: transfer.then(|| [rvec(rng, d), rvec(rng, d)]),
            },
            y_inter: rng.gen_range(0..2),
            y_tra: [1, rng.gen_range(0..2)],
        }
    }

    fn config(d: usize, fusion: FusionMode, mt: bool, aw: bool) -> TrainConfig {
        let mut cfg = TrainConfig::default();
        cfg.backbone.hidden_size = d;
        cfg.fusion_mode = fusion;
        cfg.mt = mt;
        cfg.aw = aw;
        cfg
    }

    #[test]
    fn head_widths_follow_fusion_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (mode, width) in [(FusionMode::Attention, 28), (FusionMode::Concat, 28), (FusionMode::Off, 20)] {
            let m = FalconModel::new(&config(4, mode, true, true), &mut rng);
            assert_eq!(m.head_input(), width);
            assert_eq!((m.w_tra.rows, m.w_tra.cols), (2, 16));
        }
        let mut cfg = config(4, FusionMode::Attention, true, true);
        cfg.ft = false;
        assert_eq!(FalconModel::new(&cfg, &mut rng).head_input(), 20);
    }

    #[test]
    fn transfer_features_are_required_with_fusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = FalconModel::new(&config(4, FusionMode::Attention, true, true), &mut rng);
        let ex = example(&mut rng, 4, false);
        assert!(m.forward(&ex.input).is_err());
    }

    #[test]
    fn unit_task_weights_give_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = FalconModel::new(&config(4, FusionMode::Attention, true, true), &mut rng);
        let batch: Vec<TrainingExample> = (0..3).map(|_| example(&mut rng, 4, true)).collect();
        let refs: Vec<&TrainingExample> = batch.iter().collect();
        let loss = m.batch_gradient(&refs, &mut zeroed(&m)).unwrap();
        let expected = 0.5 * loss.l_inter + 0.5 * loss.l_tra.unwrap() + 2.0 * std::f64::consts::LN_2;
        assert!((loss.combined.total - expected).abs() < 1e-12);
    }

    #[test]
    fn main_only_objective_ignores_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = FalconModel::new(&config(4, FusionMode::Off, false, true), &mut rng);
        let batch: Vec<TrainingExample> = (0..3).map(|_| example(&mut rng, 4, false)).collect();
        let refs: Vec<&TrainingExample> = batch.iter().collect();
        let mut grad = zeroed(&m);
        let loss = m.batch_gradient(&refs, &mut grad).unwrap();
        assert_eq!(loss.l_tra, None);
        assert_eq!(loss.combined.total, loss.l_inter);
        assert!(grad.w_tra.data.iter().all(|v| *v == 0.0));
        assert_eq!(grad.task_weights, vec![0.0, 0.0]);
    }

    #[test]
    fn unit_weight_objective_sums_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = FalconModel::new(&config(4, FusionMode::Concat, true, false), &mut rng);
        let batch: Vec<TrainingExample> = (0..3).map(|_| example(&mut rng, 4, true)).collect();
        let refs: Vec<&TrainingExample> = batch.iter().collect();
        let loss = m.batch_gradient(&refs, &mut zeroed(&m)).unwrap();
        assert_eq!(loss.combined.total, loss.l_inter + loss.l_tra.unwrap());
    }

    #[test]
    fn full_model_gradient_matches_finite_differences() {
        let modes = [
            (FusionMode::Attention, true, true, AttentionNorm::Softmax),
            (FusionMode::Attention, true, false, AttentionNorm::Literal),
            (FusionMode::Concat, true, true, AttentionNorm::Softmax),
            (FusionMode::Off, false, true, AttentionNorm::Softmax),
        ];
        for (case, (mode, mt, aw, norm)) in modes.into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + case as u64);
            let mut cfg = config(4, mode, mt, aw);
            cfg.attention_norm = norm;
            let mut m = FalconModel::new(&cfg, &mut rng);
            m.task_weights = vec![0.8, 1.3];
            let batch: Vec<TrainingExample> = (0..3).map(|_| example(&mut rng, 4, mode != FusionMode::Off)).collect();
            let refs: Vec<&TrainingExample> = batch.iter().collect();
            let mut grad = zeroed(&m);
            m.batch_gradient(&refs, &mut grad).unwrap();
            let num = finite_difference(&m, |_| true, 1e-6, |p| p.batch_loss(&refs).unwrap());
            let analytic = crate::params::to_map(&grad);
            for (name, g) in &num {
                let err = relative_error(&analytic[name], g);
                assert!(err <= 1e-4, "{mode:?} {name}: {err}");
            }
        }
    }

    #[test]
    fn softmax_heads_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = FalconModel::new(&config(4, FusionMode::Attention, true, true), &mut rng);
        for _ in 0..100 {
            let ex = example(&mut rng, 4, true);
            let z = m.w_inter.matvec(&m.forward(&ex.input).unwrap().fused);
            let p = softmax(&z);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-6);
        }
    }
}
