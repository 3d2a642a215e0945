use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary classification report; the positive class is "interaction".
/// Rates are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: String,
    pub config_hash: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Set when no example was predicted positive.
    pub precision_undefined: bool,
    /// Set when the gold data has no positive example.
    pub recall_undefined: bool,
}

impl MetricReport {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn with_labels(mut self, dataset: impl Into<String>, config_hash: impl Into<String>) -> Self {
        self.dataset = dataset.into();
        self.config_hash = config_hash.into();
        self
    }
}

/// Metrics from raw confusion counts.
pub fn from_confusion(tp: usize, fp: usize, fn_: usize, tn: usize) -> MetricReport {
    let pct = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            100.0 * num as f64 / den as f64
        }
    };
    let precision = pct(tp, tp + fp);
    let recall = pct(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MetricReport {
        dataset: String::new(),
        config_hash: String::new(),
        accuracy: pct(tp + tn, tp + fp + fn_ + tn),
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
        tn,
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
    }
}

/// Confusion-matrix metrics for aligned binary predictions and gold labels.
pub fn compute_metrics(predictions: &[u8], gold: &[u8]) -> Result<MetricReport> {
    if predictions.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: predictions.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &g) in predictions.iter().zip(gold) {
        match (p, g) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            (0, 0) => tn += 1,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "labels must be 0 or 1, got prediction {p} and gold {g}"
                )))
            }
        }
    }
    Ok(from_confusion(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn worked_confusion_example() {
        let r = from_confusion(3, 1, 1, 5);
        assert_abs_diff_eq!(r.precision, 75.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.recall, 75.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.f1, 75.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.accuracy, 80.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let y = [1, 0, 1, 1, 0];
        let r = compute_metrics(&y, &y).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (100.0, 100.0, 100.0, 100.0));
    }

    #[test]
    fn no_positive_predictions_flags_precision() {
        let r = compute_metrics(&[0, 0], &[1, 0]).unwrap();
        assert!(r.precision_undefined);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn length_mismatch_and_bad_labels() {
        assert!(compute_metrics(&[1], &[1, 0]).is_err());
        assert!(compute_metrics(&[2], &[1]).is_err());
    }

    proptest! {
        #[test]
        fn order_independent(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(u8, u8)]| -> (Vec<u8>, Vec<u8>) { v.iter().cloned().unzip() };
            let (p, g) = split(&pairs);
            let (ps, gs) = split(&shuffled);
            prop_assert_eq!(compute_metrics(&p, &g).unwrap(), compute_metrics(&ps, &gs).unwrap());
        }

        #[test]
        fn identities_hold(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50) {
            prop_assume!(tp + fp + fn_ + tn > 0);
            let r = from_confusion(tp, fp, fn_, tn);
            let acc = 100.0 * (tp + tn) as f64 / r.total() as f64;
            prop_assert!((r.accuracy - acc).abs() < 1e-9);
            if r.precision + r.recall > 0.0 {
                let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
                prop_assert!((r.f1 - f1).abs() < 1e-9);
            }
        }
    }
}
