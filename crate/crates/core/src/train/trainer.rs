use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{compute_metrics, MetricReport};
use crate::params::zeroed;
use crate::train::config::TrainConfig;
use crate::train::model::{BatchLoss, FalconModel, TrainingExample};
use crate::train::optim::AdamW;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: u64,
    /// Mean optimised objective over the epoch's batches.
    pub loss: f64,
    pub l_inter: f64,
    /// Absent when the trajectory task is switched off.
    pub l_tra: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub train: MetricReport,
    pub val: Option<MetricReport>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the latest epoch with the best validation F1 (the
    /// last epoch when there is no validation data).
    pub model: FalconModel,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Owns the trainable parameters and optimiser state.
pub struct Trainer {
    pub model: FalconModel,
    cfg: TrainConfig,
    opt: AdamW,
    rng: ChaCha8Rng,
}

/// Positive-class probabilities for a set of examples.
pub fn scores(model: &FalconModel, examples: &[TrainingExample]) -> Result<Vec<f64>> {
    crate::par::map(examples, |ex| model.predict_proba(&ex.input))
        .into_iter()
        .collect()
}

/// Metrics of `model` at `threshold` on labelled examples.
pub fn evaluate(model: &FalconModel, examples: &[TrainingExample], threshold: f64) -> Result<MetricReport> {
    let pred: Vec<u8> = scores(model, examples)?
        .into_iter()
        .map(|p| u8::from(p >= threshold))
        .collect();
    let gold: Vec<u8> = examples.iter().map(|e| e.y_inter).collect();
    compute_metrics(&pred, &gold)
}

impl Trainer {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = FalconModel::new(cfg, &mut rng);
        log::info!(
            "training config {}: lr={} wd={} batch={} epochs={} patience={} seed={} ft={} mt={} aw={} fusion={:?}",
            cfg.hash(),
            cfg.lr,
            cfg.weight_decay,
            cfg.batch_size,
            cfg.max_epochs,
            cfg.patience,
            cfg.seed,
            cfg.ft,
            cfg.mt,
            cfg.aw,
            model.fusion
        );
        Ok(Self {
            model,
            cfg: cfg.clone(),
            opt: AdamW::new(cfg.lr, cfg.weight_decay),
            rng,
        })
    }

    pub fn steps(&self) -> u64 {
        self.opt.steps()
    }

    /// One optimiser update on `batch`.
    pub fn step(&mut self, batch: &[&TrainingExample]) -> Result<BatchLoss> {
        let mut grad = zeroed(&self.model);
        let loss = self.model.batch_gradient(batch, &mut grad)?;
        if !loss.combined.total.is_finite() {
            return Err(Error::Diverged {
                epoch: 0,
                step: self.opt.steps() as usize,
                detail: format!("objective {} (L_inter {}, L_tra {:?})", loss.combined.total, loss.l_inter, loss.l_tra),
            });
        }
        self.opt.step(&mut self.model, &grad);
        Ok(loss)
    }

    /// Runs one shuffled pass over `train` and returns batch-averaged losses.
    pub fn epoch(&mut self, train: &[TrainingExample]) -> Result<(f64, f64, Option<f64>)> {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.rng);
        let (mut total, mut inter, mut tra, mut n) = (0.0, 0.0, 0.0, 0.0);
        let mut tracked = false;
        for chunk in order.chunks(self.cfg.batch_size) {
            let batch: Vec<&TrainingExample> = chunk.iter().map(|&i| &train[i]).collect();
            let loss = self.step(&batch)?;
            total += loss.combined.total;
            inter += loss.l_inter;
            if let Some(t) = loss.l_tra {
                tra += t;
                tracked = true;
            }
            n += 1.0;
        }
        Ok((total / n, inter / n, tracked.then_some(tra / n)))
    }

    /// Trains with early stopping on validation F1.
    pub fn fit(mut self, train: &[TrainingExample], val: &[TrainingExample]) -> Result<TrainOutcome> {
        if train.is_empty() {
            return Err(Error::InvalidInput("no training examples".into()));
        }
        let mut history = Vec::new();
        let mut best: Option<(f64, usize, FalconModel)> = None;
        let mut since_best = 0;
        for epoch in 0..self.cfg.max_epochs {
            let (loss, l_inter, l_tra) = self.epoch(train).map_err(|e| match e {
                Error::Diverged { step, detail, .. } => Error::Diverged { epoch, step, detail },
                other => other,
            })?;
            let train_report = evaluate(&self.model, train, self.cfg.threshold)?;
            let val_report = if val.is_empty() {
                None
            } else {
                Some(evaluate(&self.model, val, self.cfg.threshold)?)
            };
            let entry = EpochLog {
                epoch,
                steps: self.opt.steps(),
                loss,
                l_inter,
                l_tra,
                c1: self.model.task_weights[0],
                c2: self.model.task_weights[1],
                train: train_report,
                val: val_report,
            };
            log::info!(
                "epoch {epoch}: L={loss:.5} L_inter={l_inter:.5} L_tra={} c1={:.4} c2={:.4} train_acc={:.2} val_f1={}",
                l_tra.map_or("-".into(), |v| format!("{v:.5}")),
                entry.c1,
                entry.c2,
                entry.train.accuracy,
                entry.val.as_ref().map_or("-".into(), |v| format!("{:.2}", v.f1)),
            );
            let score = entry.val.as_ref().map_or(f64::NEG_INFINITY, |v| v.f1);
            history.push(entry);
            let improved = match &best {
                None => true,
                // ties go to the later epoch
                Some((b, _, _)) => val.is_empty() || score >= *b,
            };
            if improved {
                best = Some((score, epoch, self.model.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if self.cfg.patience > 0 && since_best >= self.cfg.patience {
                    log::info!("early stop after epoch {epoch}");
                    break;
                }
            }
        }
        let (_, best_epoch, model) = best.expect("at least one epoch ran");
        Ok(TrainOutcome {
            model,
            history,
            best_epoch,
        })
    }
}
