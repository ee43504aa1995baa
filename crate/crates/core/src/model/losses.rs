//! The three training losses: class-weighted cross-entropy and its two
//! refocusing variants that scale each class by (1 - F1) or (1 - Recall)
//! from the previous epoch.
//!
//! All losses take per-sample probabilities of class 1 and return the mean
//! loss together with the analytic gradient with respect to the logits.

use serde::{Deserialize, Serialize};

use crate::balance::ClassWeights;
use crate::error::{Error, Result};

/// Probabilities are clamped to [EPS, 1-EPS] before any log.
pub const PROB_EPS: f64 = 1e-7;

/// Previous-epoch per-class statistics for one head. Class index 0 is the
/// negative class, 1 the positive class. Fresh stats are all zero, which
/// makes the refocusing losses collapse to plain weighted cross-entropy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub f1: [f64; 2],
    pub recall: [f64; 2],
}

impl ClassStats {
    pub fn validate(&self) -> Result<()> {
        for v in self.f1.iter().chain(self.recall.iter()) {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidConfig(format!(
                    "class statistics must be in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean over samples of -w_y * log p(y), gradient w_y * (p - y) / N.
pub fn weighted_ce(
    probs: &[f64],
    labels: &[bool],
    cw: &ClassWeights,
) -> Result<(f64, Vec<f64>)> {
    scaled_ce(probs, labels, cw, |_| 1.0)
}

/// Weighted cross-entropy where each class additionally carries a
/// (1 - F1_c) factor, so classes the model already serves well fade out of
/// the loss. F1 comes from the previous epoch and is constant in the step.
pub fn f1_ce(
    probs: &[f64],
    labels: &[bool],
    cw: &ClassWeights,
    stats: &ClassStats,
) -> Result<(f64, Vec<f64>)> {
    stats.validate()?;
    scaled_ce(probs, labels, cw, |label| 1.0 - stats.f1[usize::from(label)])
}

/// Same shape as [`f1_ce`] with (1 - Recall_c) as the refocusing factor.
pub fn recall_ce(
    probs: &[f64],
    labels: &[bool],
    cw: &ClassWeights,
    stats: &ClassStats,
) -> Result<(f64, Vec<f64>)> {
    stats.validate()?;
    scaled_ce(probs, labels, cw, |label| 1.0 - stats.recall[usize::from(label)])
}

/// Shared core: loss_i = scale(y_i) * w_{y_i} * -log p_i(y_i), averaged
/// over the batch; gradient wrt logit_i = scale(y_i) * w_{y_i} * (p_i - y_i) / N.
fn scaled_ce(
    probs: &[f64],
    labels: &[bool],
    cw: &ClassWeights,
    scale: impl Fn(bool) -> f64,
) -> Result<(f64, Vec<f64>)> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: probs.len(),
            right: labels.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::TooFewSamples { n: 0 });
    }
    let n = probs.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(labels) {
        if !p.is_finite() {
            return Err(Error::NonFinite("probability"));
        }
        let factor = scale(y) * cw.for_label(y);
        let p_true = if y { p } else { 1.0 - p };
        let p_true = p_true.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= factor * p_true.ln();
        let target = if y { 1.0 } else { 0.0 };
        grad.push(factor * (p - target) / n);
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::time::Instant;

    fn sigmoid(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    fn unit_weights() -> ClassWeights {
        ClassWeights::default()
    }

    #[test]
    fn perfect_predictions_drive_loss_to_zero() {
        let probs = vec![1.0 - 1e-9, 1e-9];
        let labels = vec![true, false];
        let (loss, _) = weighted_ce(&probs, &labels, &unit_weights()).unwrap();
        // Bounded by the clamp: -ln(1 - EPS) per sample.
        assert!(loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn coin_flip_probabilities_cost_ln_two() {
        let probs = vec![0.5; 8];
        let labels = vec![true, false, true, false, true, true, false, false];
        let (loss, _) = weighted_ce(&probs, &labels, &unit_weights()).unwrap();
        assert!((loss - (2.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn nan_probability_is_rejected() {
        let r = weighted_ce(&[f64::NAN], &[true], &unit_weights());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let r = weighted_ce(&[0.5, 0.5], &[true], &unit_weights());
        assert!(matches!(r, Err(Error::LengthMismatch { left: 2, right: 1 })));
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert!(weighted_ce(&[], &[], &unit_weights()).is_err());
    }

    #[test]
    fn zero_stats_reduce_to_weighted_ce() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probs: Vec<f64> = (0..32).map(|_| rng.gen_range(0.01..0.99)).collect();
        let labels: Vec<bool> = (0..32).map(|_| rng.gen_bool(0.3)).collect();
        let cw = ClassWeights::new(4.0, 1.0).unwrap();
        let base = weighted_ce(&probs, &labels, &cw).unwrap();
        let zeroed = ClassStats::default();
        let f1 = f1_ce(&probs, &labels, &cw, &zeroed).unwrap();
        let rc = recall_ce(&probs, &labels, &cw, &zeroed).unwrap();
        assert!((base.0 - f1.0).abs() < 1e-12);
        assert!((base.0 - rc.0).abs() < 1e-12);
        assert_eq!(base.1, f1.1);
        assert_eq!(base.1, rc.1);
    }

    #[test]
    fn saturated_stats_zero_the_loss() {
        let stats = ClassStats { f1: [1.0; 2], recall: [1.0; 2] };
        let probs = vec![0.2, 0.9];
        let labels = vec![true, false];
        let (loss, grad) = f1_ce(&probs, &labels, &unit_weights(), &stats).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
        let (loss, grad) = recall_ce(&probs, &labels, &unit_weights(), &stats).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn refocusing_never_exceeds_weighted_ce() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(1..20);
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let cw = ClassWeights::new(rng.gen_range(0.5..8.0), rng.gen_range(0.5..8.0)).unwrap();
            let stats = ClassStats {
                f1: [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)],
                recall: [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)],
            };
            let base = weighted_ce(&probs, &labels, &cw).unwrap().0;
            assert!(f1_ce(&probs, &labels, &cw, &stats).unwrap().0 <= base + 1e-12);
            assert!(recall_ce(&probs, &labels, &cw, &stats).unwrap().0 <= base + 1e-12);
        }
    }

    #[test]
    fn out_of_range_stats_are_rejected() {
        let stats = ClassStats { f1: [1.5, 0.0], recall: [0.0, 0.0] };
        assert!(f1_ce(&[0.5], &[true], &unit_weights(), &stats).is_err());
    }

    #[test]
    fn losses_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let n = rng.gen_range(1..16);
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let (loss, _) = weighted_ce(&probs, &labels, &unit_weights()).unwrap();
            assert!(loss >= 0.0);
        }
    }

    /// Central finite differences on the logits. The loss functions take
    /// probabilities, so the oracle recomputes sigmoid around each
    /// perturbed logit independently of the analytic path.
    fn fd_check(loss_of_logits: impl Fn(&[f64]) -> f64, z: &[f64], grad: &[f64]) {
        let eps = 1e-5;
        for i in 0..z.len() {
            let mut hi = z.to_vec();
            hi[i] += eps;
            let mut lo = z.to_vec();
            lo[i] -= eps;
            let numeric = (loss_of_logits(&hi) - loss_of_logits(&lo)) / (2.0 * eps);
            let analytic = grad[i];
            let denom = numeric.abs().max(analytic.abs()).max(1e-8);
            let rel = (numeric - analytic).abs() / denom;
            assert!(
                rel < 1e-4 || (numeric - analytic).abs() < 1e-9,
                "coordinate {i}: numeric {numeric} vs analytic {analytic} (rel {rel})"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences_on_random_instances() {
        // 100 random instances per loss, logits in [-3, 3] so the clamp
        // never bites, relative error < 1e-4, whole check under 10 s.
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for instance in 0..100 {
            let n = rng.gen_range(1..=32);
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            let cw = ClassWeights::new(rng.gen_range(0.5..8.0), rng.gen_range(0.5..8.0)).unwrap();
            let stats = ClassStats {
                f1: [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)],
                recall: [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)],
            };
            let probs: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();

            let (_, grad) = weighted_ce(&probs, &labels, &cw).unwrap();
            fd_check(
                |zz| {
                    let p: Vec<f64> = zz.iter().map(|&v| sigmoid(v)).collect();
                    weighted_ce(&p, &labels, &cw).unwrap().0
                },
                &z,
                &grad,
            );

            let (_, grad) = f1_ce(&probs, &labels, &cw, &stats).unwrap();
            fd_check(
                |zz| {
                    let p: Vec<f64> = zz.iter().map(|&v| sigmoid(v)).collect();
                    f1_ce(&p, &labels, &cw, &stats).unwrap().0
                },
                &z,
                &grad,
            );

            let (_, grad) = recall_ce(&probs, &labels, &cw, &stats).unwrap();
            fd_check(
                |zz| {
                    let p: Vec<f64> = zz.iter().map(|&v| sigmoid(v)).collect();
                    recall_ce(&p, &labels, &cw, &stats).unwrap().0
                },
                &z,
                &grad,
            );

            let _ = instance;
        }
        assert!(
            started.elapsed().as_secs() < 10,
            "finite-difference suite too slow: {:?}",
            started.elapsed()
        );
    }
}
