//! Classification metrics, ablation runs and transfer evaluation.

mod ablation;
mod metrics;

pub use ablation::{
    ablation_csv, ablation_text, ablation_variants, evaluate_checkpoint, evaluate_split, evaluate_transfer,
    run_ablations, seed_means, AblationRow, Variant,
};
pub use metrics::{compute_metrics, from_confusion, MetricReport};
