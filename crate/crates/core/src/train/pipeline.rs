use crate::dataset::{LabeledExample, LabeledTriple, Split};
use crate::encoder::{load_backbone, prepare, EncoderBackbone};
use crate::error::{Error, Result};
use crate::fusion::{pretrain_trajectory_extractor, FrozenTrajectoryExtractor, PretrainLog};
use crate::train::checkpoint::Checkpoint;
use crate::train::config::{FusionMode, TrainConfig};
use crate::train::model::{prepare_example, TrainingExample};
use crate::train::trainer::Trainer;

/// Runs the backbone over every example, in parallel when enabled.
pub fn prepare_examples(
    backbone: &dyn EncoderBackbone,
    examples: &[LabeledExample],
    extractor: Option<&FrozenTrajectoryExtractor>,
) -> Result<Vec<TrainingExample>> {
    crate::par::map(examples, |ex| prepare_example(backbone, ex, extractor))
        .into_iter()
        .collect()
}

/// Pretrains and freezes a trajectory extractor on labelled triples.
pub fn pretrain_from_triples(
    triples: &[LabeledTriple],
    cfg: &TrainConfig,
) -> Result<(FrozenTrajectoryExtractor, PretrainLog)> {
    cfg.validate()?;
    let backbone = load_backbone(&cfg.backbone)?;
    let corpus: Vec<_> = crate::par::map(triples, |t| {
        prepare(backbone.as_ref(), &t.triple.segment.text, &t.triple.entities()).map(|p| (p, t.y_tra))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    pretrain_trajectory_extractor(&corpus, cfg)
}

/// Trains on the examples tagged `train`, early-stopping on those tagged
/// `val`. Untagged examples are ignored.
pub fn train_labeled(
    examples: &[LabeledExample],
    extractor: Option<FrozenTrajectoryExtractor>,
    cfg: &TrainConfig,
) -> Result<Checkpoint> {
    cfg.validate()?;
    let uses_transfer = cfg.effective_fusion() != FusionMode::Off;
    if uses_transfer && extractor.is_none() {
        return Err(Error::Config(
            "feature transfer needs a pretrained trajectory extractor".into(),
        ));
    }
    if let Some(e) = &extractor {
        e.check_compatible(&cfg.backbone)?;
    }
    let backbone = load_backbone(&cfg.backbone)?;
    let pick = |s: Split| -> Vec<LabeledExample> {
        examples.iter().filter(|e| e.split == Some(s)).cloned().collect()
    };
    let used = if uses_transfer { extractor.as_ref() } else { None };
    let train = prepare_examples(backbone.as_ref(), &pick(Split::Train), used)?;
    let val = prepare_examples(backbone.as_ref(), &pick(Split::Val), used)?;
    log::info!("training on {} examples, validating on {}", train.len(), val.len());
    let outcome = Trainer::new(cfg)?.fit(&train, &val)?;
    Ok(Checkpoint::from_outcome(cfg, outcome, extractor))
}
