use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{load_backbone, EncoderBackbone};
use crate::error::{Error, Result};
use crate::fusion::FrozenTrajectoryExtractor;
use crate::ingest::CandidateQuadruple;
use crate::params;
use crate::train::config::TrainConfig;
use crate::train::model::{prepare_candidate, FalconModel};
use crate::train::trainer::{EpochLog, TrainOutcome};

const FORMAT: &str = "falcon-checkpoint/1";

/// A trained classifier with everything needed to score new candidates.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub model: FalconModel,
    pub extractor: Option<FrozenTrajectoryExtractor>,
    pub history: Vec<EpochLog>,
    pub best_epoch: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    config_hash: String,
    backbone_identity: String,
    config: TrainConfig,
    params: BTreeMap<String, String>,
    extractor: Option<serde_json::Value>,
    best_epoch: Option<usize>,
    history: Vec<EpochLog>,
}

impl Checkpoint {
    pub fn from_outcome(config: &TrainConfig, outcome: TrainOutcome, extractor: Option<FrozenTrajectoryExtractor>) -> Self {
        Self {
            config: config.clone(),
            model: outcome.model,
            extractor,
            history: outcome.history,
            best_epoch: Some(outcome.best_epoch),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let backbone = load_backbone(&self.config.backbone)?;
        let file = CheckpointFile {
            format: FORMAT.into(),
            config_hash: self.config.hash(),
            backbone_identity: backbone.identity(),
            config: self.config.clone(),
            params: params::to_blobs(&self.model),
            extractor: self.extractor.as_ref().map(|e| e.to_json()),
            best_epoch: self.best_epoch,
            history: self.history.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(s)?;
        if file.format != FORMAT {
            return Err(Error::CheckpointMismatch(format!("unexpected format `{}`", file.format)));
        }
        let backbone = load_backbone(&file.config.backbone)?;
        if backbone.identity() != file.backbone_identity {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint backbone `{}` differs from `{}`",
                file.backbone_identity,
                backbone.identity()
            )));
        }
        let mut model = FalconModel::new(&file.config, &mut ChaCha8Rng::seed_from_u64(0));
        params::from_blobs(&mut model, &file.params)?;
        let extractor = file
            .extractor
            .as_ref()
            .map(FrozenTrajectoryExtractor::from_json)
            .transpose()?;
        if let Some(e) = &extractor {
            e.check_compatible(&file.config.backbone)?;
        }
        if file.config.ft && extractor.is_none() {
            return Err(Error::CheckpointMismatch(
                "feature transfer is enabled but the checkpoint carries no extractor".into(),
            ));
        }
        Ok(Self {
            config: file.config,
            model,
            extractor,
            history: file.history,
            best_epoch: file.best_epoch,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn checksum(&self) -> String {
        params::checksum(&self.model)
    }

    pub fn parameter_count(&self) -> usize {
        params::count(&self.model)
    }

    /// Scores candidates with the backbone named in the config.
    pub fn predict(&self, candidates: &[CandidateQuadruple], threshold: f64) -> Result<Vec<Prediction>> {
        let backbone = load_backbone(&self.config.backbone)?;
        self.predict_with(backbone.as_ref(), candidates, threshold)
    }

    pub fn predict_with(
        &self,
        backbone: &dyn EncoderBackbone,
        candidates: &[CandidateQuadruple],
        threshold: f64,
    ) -> Result<Vec<Prediction>> {
        let extractor = if self.model.fusion == crate::train::FusionMode::Off {
            None
        } else {
            self.extractor.as_ref()
        };
        crate::par::map(candidates, |c| {
            let scored = prepare_candidate(backbone, c, extractor).and_then(|p| self.model.predict_proba(&p));
            match scored {
                Ok(score) => Ok(Prediction {
                    candidate: c.clone(),
                    score: Some(score),
                    label: Some(score >= threshold),
                    skipped: None,
                }),
                Err(e @ (Error::ContextOverflow { .. } | Error::OverlappingSpans | Error::SpanOutOfRange { .. })) => {
                    log::warn!("skipping candidate in {}: {e}", c.segment.segment_id);
                    Ok(Prediction {
                        candidate: c.clone(),
                        score: None,
                        label: None,
                        skipped: Some(e.to_string()),
                    })
                }
                Err(e) => Err(e),
            }
        })
        .into_iter()
        .collect()
    }
}

/// Score and label for one candidate, or the reason it was not scored.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub candidate: CandidateQuadruple,
    pub score: Option<f64>,
    pub label: Option<bool>,
    pub skipped: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PredictionWire {
    #[serde(flatten)]
    candidate: crate::ingest::jsonl::CandidateWire,
    score: Option<f64>,
    label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

pub fn prediction_to_line(p: &Prediction) -> String {
    serde_json::to_string(&PredictionWire {
        candidate: (&p.candidate).into(),
        score: p.score,
        label: p.label,
        skipped: p.skipped.clone(),
    })
    .expect("prediction serializes")
}

pub fn parse_prediction_line(line: &str) -> Result<Prediction> {
    let w: PredictionWire = serde_json::from_str(line)?;
    let candidate = w.candidate.into_candidate();
    candidate.validate()?;
    Ok(Prediction {
        candidate,
        score: w.score,
        label: w.label,
        skipped: w.skipped,
    })
}
