use crate::error::{Error, Result};

/// Probabilities are clipped to `[PROB_CLIP, 1 − PROB_CLIP]` before the log.
pub const PROB_CLIP: f64 = 1e-7;
/// Task-weighting scalars are kept at least this far from zero.
pub const MIN_TASK_WEIGHT: f64 = 1e-3;

fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        Err(Error::InvalidInput(format!("label {y} is not binary")))
    } else {
        Ok(())
    }
}

/// Binary cross-entropy of one example.
pub fn bce_single(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Batch-mean binary cross-entropy over positive-class probabilities.
pub fn interaction_loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            actual: labels.len(),
        });
    }
    if probs.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        check_label(y)?;
        sum += bce_single(p, y);
    }
    Ok(sum / probs.len() as f64)
}

/// Mean of the two trajectory-branch losses.
pub fn trajectory_loss(probs1: &[f64], labels1: &[u8], probs2: &[f64], labels2: &[u8]) -> Result<f64> {
    Ok((interaction_loss(probs1, labels1)? + interaction_loss(probs2, labels2)?) / 2.0)
}

/// `∂ℓ/∂z₁` for a two-way softmax head where `p = softmax(z)₁`; the
/// gradient on `z₀` is its negation. Zero inside the clipped region.
pub fn bce_logit_grad(p: f64, y: u8) -> f64 {
    if !(PROB_CLIP..=1.0 - PROB_CLIP).contains(&p) {
        0.0
    } else {
        p - f64::from(y)
    }
}

fn clamp_weight(c: f64) -> (f64, bool) {
    if c.abs() < MIN_TASK_WEIGHT {
        (if c < 0.0 { -MIN_TASK_WEIGHT } else { MIN_TASK_WEIGHT }, true)
    } else {
        (c, false)
    }
}

/// Combined objective and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultitaskLoss {
    pub total: f64,
    pub d_inter: f64,
    pub d_tra: f64,
    pub d_c1: f64,
    pub d_c2: f64,
}

/// `L_inter/(2c₁²) + L_tra/(2c₂²) + ln(1+c₁²) + ln(1+c₂²)`.
pub fn multitask_loss(l_inter: f64, l_tra: f64, c1: f64, c2: f64) -> MultitaskLoss {
    let (c1, frozen1) = clamp_weight(c1);
    let (c2, frozen2) = clamp_weight(c2);
    let total = l_inter / (2.0 * c1 * c1)
        + l_tra / (2.0 * c2 * c2)
        + (1.0 + c1 * c1).ln()
        + (1.0 + c2 * c2).ln();
    let dc = |l: f64, c: f64, frozen: bool| {
        if frozen {
            0.0
        } else {
            -l / (c * c * c) + 2.0 * c / (1.0 + c * c)
        }
    };
    MultitaskLoss {
        total,
        d_inter: 1.0 / (2.0 * c1 * c1),
        d_tra: 1.0 / (2.0 * c2 * c2),
        d_c1: dc(l_inter, c1, frozen1),
        d_c2: dc(l_tra, c2, frozen2),
    }
}

/// Which terms make up the optimised objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Adaptive weighting with learnable `c₁, c₂`.
    Adaptive,
    /// `L_inter + L_tra`.
    UnitWeights,
    /// `L_inter` alone.
    MainOnly,
}

impl Objective {
    pub fn combine(self, l_inter: f64, l_tra: f64, c1: f64, c2: f64) -> MultitaskLoss {
        match self {
            Objective::Adaptive => multitask_loss(l_inter, l_tra, c1, c2),
            Objective::UnitWeights => MultitaskLoss {
                total: l_inter + l_tra,
                d_inter: 1.0,
                d_tra: 1.0,
                d_c1: 0.0,
                d_c2: 0.0,
            },
            Objective::MainOnly => MultitaskLoss {
                total: l_inter,
                d_inter: 1.0,
                d_tra: 0.0,
                d_c1: 0.0,
                d_c2: 0.0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn perfect_predictions_have_near_zero_loss() {
        let l = interaction_loss(&[1.0, 0.0, 1.0], &[1, 0, 1]).unwrap();
        assert!(l < 1e-6);
    }

    #[test]
    fn coin_flip_costs_ln2() {
        let l = interaction_loss(&[0.5; 7], &[1, 0, 1, 1, 0, 0, 1]).unwrap();
        assert_abs_diff_eq!(l, LN_2, epsilon = 1e-15);
    }

    #[test]
    fn mixed_batch_matches_hand_sum() {
        let l = interaction_loss(&[0.9, 0.2, 0.6], &[1, 0, 0]).unwrap();
        let want = -(0.9f64.ln() + 0.8f64.ln() + 0.4f64.ln()) / 3.0;
        assert_abs_diff_eq!(l, want, epsilon = 1e-15);
    }

    #[test]
    fn non_binary_label_is_an_error() {
        assert!(interaction_loss(&[0.5], &[2]).is_err());
        assert!(interaction_loss(&[0.5, 0.5], &[1]).is_err());
    }

    #[test]
    fn trajectory_loss_averages_branches() {
        assert_abs_diff_eq!(trajectory_loss(&[1.0], &[1], &[0.0], &[0]).unwrap(), 0.0, epsilon = 1e-6);
        let a = interaction_loss(&[0.7, 0.4], &[1, 1]).unwrap();
        let b = interaction_loss(&[0.1, 0.3], &[0, 1]).unwrap();
        let t = trajectory_loss(&[0.7, 0.4], &[1, 1], &[0.1, 0.3], &[0, 1]).unwrap();
        assert_abs_diff_eq!(t, (a + b) / 2.0, epsilon = 1e-15);
        let want = (-(0.7f64.ln() + 0.4f64.ln()) / 2.0 + -(0.9f64.ln() + 0.3f64.ln()) / 2.0) / 2.0;
        assert_abs_diff_eq!(t, want, epsilon = 1e-15);
    }

    #[test]
    fn unit_weights_closed_form() {
        let m = multitask_loss(0.37, 1.21, 1.0, 1.0);
        assert_abs_diff_eq!(m.total, 0.5 * 0.37 + 0.5 * 1.21 + 2.0 * LN_2, epsilon = 1e-12);
    }

    #[test]
    fn regularizer_grows_with_c2() {
        let mut last = f64::NEG_INFINITY;
        for c2 in [1.0, 2.0, 5.0, 20.0, 100.0] {
            let v = multitask_loss(0.0, 0.0, 1.0, c2).total;
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn c1_gradient_vanishes_at_unit_loss() {
        let m = multitask_loss(1.0, 0.5, 1.0, 1.0);
        assert_abs_diff_eq!(m.d_c1, 0.0, epsilon = 1e-15);
        let h = 1e-6;
        let fd = (multitask_loss(1.0, 0.5, 1.0 + h, 1.0).total
            - multitask_loss(1.0, 0.5, 1.0 - h, 1.0).total)
            / (2.0 * h);
        assert_abs_diff_eq!(fd, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn clamped_weights_stay_finite() {
        let m = multitask_loss(1.0, 1.0, 0.0, -1e-9);
        assert!(m.total.is_finite());
        assert_eq!(m.d_c1, 0.0);
    }

    #[test]
    fn logit_gradient_matches_finite_difference() {
        for &(z0, z1, y) in &[(0.3, -0.2, 1u8), (1.5, 0.1, 0), (-2.0, 2.0, 1)] {
            let loss = |a: f64, b: f64| {
                let p = crate::linalg::softmax(&[a, b])[1];
                bce_single(p, y)
            };
            let p = crate::linalg::softmax(&[z0, z1])[1];
            let h = 1e-6;
            let fd1 = (loss(z0, z1 + h) - loss(z0, z1 - h)) / (2.0 * h);
            let fd0 = (loss(z0 + h, z1) - loss(z0 - h, z1)) / (2.0 * h);
            assert_abs_diff_eq!(bce_logit_grad(p, y), fd1, epsilon = 1e-7);
            assert_abs_diff_eq!(-bce_logit_grad(p, y), fd0, epsilon = 1e-7);
        }
    }
}
