#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use falcon_core::dataset::{load_labeled, load_labeled_triples, LabeledExample, LabeledTriple};
use falcon_core::fusion::FrozenTrajectoryExtractor;
use falcon_core::train::{pretrain_from_triples, train_labeled, Checkpoint, TrainConfig};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn config() -> TrainConfig {
    TrainConfig::load(fixture("fixture.toml")).unwrap()
}

pub fn labeled() -> &'static [LabeledExample] {
    static CELL: OnceLock<Vec<LabeledExample>> = OnceLock::new();
    CELL.get_or_init(|| load_labeled(fixture("labeled.jsonl")).unwrap().items)
}

pub fn trajectory() -> &'static [LabeledTriple] {
    static CELL: OnceLock<Vec<LabeledTriple>> = OnceLock::new();
    CELL.get_or_init(|| load_labeled_triples(fixture("trajectory.jsonl")).unwrap().items)
}

pub fn extractor() -> &'static FrozenTrajectoryExtractor {
    static CELL: OnceLock<FrozenTrajectoryExtractor> = OnceLock::new();
    CELL.get_or_init(|| pretrain_from_triples(trajectory(), &config()).unwrap().0)
}

/// Full model trained on the fixture with the fixture config.
pub fn checkpoint() -> &'static Checkpoint {
    static CELL: OnceLock<Checkpoint> = OnceLock::new();
    CELL.get_or_init(|| train_labeled(labeled(), Some(extractor().clone()), &config()).unwrap())
}
