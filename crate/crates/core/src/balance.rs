//! Majority-class undersampling weighted toward shorter tweets, and
//! integer class-weight derivation from the class counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BinarySample;
use crate::error::{Error, Result};

/// Per-class loss weights. The majority class is always anchored at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub w0: f64,
    pub w1: f64,
}

impl ClassWeights {
    pub fn new(w0: f64, w1: f64) -> Result<Self> {
        if !(w0 > 0.0 && w0.is_finite() && w1 > 0.0 && w1.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "class weights must be positive and finite, got ({w0}, {w1})"
            )));
        }
        Ok(ClassWeights { w0, w1 })
    }

    /// Weight for one binary label.
    pub fn for_label(&self, label: bool) -> f64 {
        if label {
            self.w1
        } else {
            self.w0
        }
    }

    /// Re-checks the positivity invariant, for values built by deserialization.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.w0, self.w1).map(|_| ())
    }
}

impl Default for ClassWeights {
    fn default() -> Self {
        ClassWeights { w0: 1.0, w1: 1.0 }
    }
}

/// Draws exactly `target` samples without replacement, keeping each sample
/// with probability proportional to 1/word_count so shorter tweets are
/// preferred. Relative order is preserved. Uses the exponential-keys
/// scheme: every sample gets key = -ln(u)/w and the `target` smallest keys
/// survive.
pub fn undersample(
    samples: &[BinarySample],
    target: usize,
    seed: u64,
) -> Result<Vec<BinarySample>> {
    if target > samples.len() {
        return Err(Error::TargetTooLarge {
            target,
            n: samples.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
    for (index, sample) in samples.iter().enumerate() {
        let words = sample.text.split_whitespace().count();
        if words == 0 {
            return Err(Error::EmptyText {
                id: sample.id.clone(),
            });
        }
        let weight = 1.0 / words as f64;
        // gen samples in [0, 1); flip to (0, 1] so ln never sees zero.
        let u: f64 = 1.0 - rng.gen::<f64>();
        keyed.push((-u.ln() / weight, index));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<usize> = keyed[..target].iter().map(|&(_, i)| i).collect();
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| samples[i].clone()).collect())
}

/// Anchors the majority class at weight 1 and gives the minority class
/// floor(majority/minority), never less than 1.
pub fn derive_class_weights(count0: usize, count1: usize) -> Result<ClassWeights> {
    if count0 == 0 || count1 == 0 {
        return Err(Error::DegenerateClass { count0, count1 });
    }
    let ratio = |major: usize, minor: usize| ((major / minor) as f64).max(1.0);
    if count0 <= count1 {
        ClassWeights::new(ratio(count1, count0), 1.0)
    } else {
        ClassWeights::new(1.0, ratio(count0, count1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Emotion, Labels, Origin};
    use proptest::prelude::*;

    fn sample(id: &str, words: usize) -> BinarySample {
        BinarySample {
            id: id.to_string(),
            text: vec!["w"; words].join(" "),
            labels: Labels::Binary {
                emotion: Emotion::Anger,
                label: false,
            },
            origin: Origin::Original,
        }
    }

    #[test]
    fn full_target_keeps_everything_in_order() {
        let pool: Vec<BinarySample> = (0..10).map(|i| sample(&format!("s{i}"), i + 1)).collect();
        let kept = undersample(&pool, 10, 3).unwrap();
        assert_eq!(kept, pool);
    }

    #[test]
    fn zero_target_keeps_nothing() {
        let pool = vec![sample("a", 2), sample("b", 3)];
        assert!(undersample(&pool, 0, 3).unwrap().is_empty());
    }

    #[test]
    fn oversized_target_is_rejected() {
        let pool = vec![sample("a", 2)];
        assert!(matches!(
            undersample(&pool, 2, 3),
            Err(Error::TargetTooLarge { target: 2, n: 1 })
        ));
    }

    #[test]
    fn output_preserves_relative_order_and_is_a_subset() {
        let pool: Vec<BinarySample> = (0..50).map(|i| sample(&format!("s{i}"), 1 + i % 7)).collect();
        let kept = undersample(&pool, 20, 17).unwrap();
        assert_eq!(kept.len(), 20);
        let positions: Vec<usize> = kept
            .iter()
            .map(|k| pool.iter().position(|p| p.id == k.id).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn determinism_per_seed() {
        let pool: Vec<BinarySample> = (0..30).map(|i| sample(&format!("s{i}"), 1 + i % 5)).collect();
        assert_eq!(
            undersample(&pool, 10, 5).unwrap(),
            undersample(&pool, 10, 5).unwrap()
        );
        assert_ne!(
            undersample(&pool, 10, 5).unwrap(),
            undersample(&pool, 10, 6).unwrap()
        );
    }

    #[test]
    fn short_tweets_win_at_the_documented_rate() {
        // Lengths 1 and 9 give keep weights 1 and 1/9; keeping one sample
        // should pick the short one with probability 0.9. Monte-Carlo over
        // 10,000 seeds, 3 sigma band.
        let pool = vec![sample("short", 1), sample("long", 9)];
        let trials = 10_000usize;
        let mut short_kept = 0usize;
        for seed in 0..trials as u64 {
            let kept = undersample(&pool, 1, seed).unwrap();
            if kept[0].id == "short" {
                short_kept += 1;
            }
        }
        let p = 0.9f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        let expected = trials as f64 * p;
        assert!(
            (short_kept as f64 - expected).abs() <= 3.0 * sigma,
            "short kept {short_kept} times, expected {expected} ± {:.1}",
            3.0 * sigma
        );
    }

    #[test]
    fn empty_text_is_rejected() {
        let mut bad = sample("bad", 1);
        bad.text = "   ".to_string();
        assert!(undersample(&[bad], 1, 0).is_err());
    }

    #[test]
    fn corpus_rows_reproduce_published_weights() {
        // (count1, count0) per emotion with the expected minority weight.
        let rows = [
            (Emotion::Anger, 2590, 13986, 5.0),
            (Emotion::Fear, 1520, 12768, 8.0),
            (Emotion::Hatred, 1750, 12263, 7.0),
            (Emotion::Sadness, 2990, 13643, 4.0),
            (Emotion::Wonder, 1935, 14512, 7.0),
        ];
        for (emotion, count1, count0, w1) in rows {
            let w = derive_class_weights(count0, count1).unwrap();
            assert_eq!((w.w0, w.w1), (1.0, w1), "{emotion:?}");
        }
        // The happiness row is the one count pair where floor() disagrees
        // with the published 9: floor(14562/1440) = 10.
        let w = derive_class_weights(14562, 1440).unwrap();
        assert_eq!((w.w0, w.w1), (1.0, 10.0));
        assert_ne!(w.w1, 9.0);
    }

    #[test]
    fn equal_counts_give_unit_weights() {
        let w = derive_class_weights(123, 123).unwrap();
        assert_eq!((w.w0, w.w1), (1.0, 1.0));
    }

    #[test]
    fn zero_counts_are_degenerate() {
        assert!(matches!(
            derive_class_weights(0, 5),
            Err(Error::DegenerateClass { .. })
        ));
        assert!(matches!(
            derive_class_weights(5, 0),
            Err(Error::DegenerateClass { .. })
        ));
    }

    proptest! {
        #[test]
        fn majority_is_always_anchored_at_one(count0 in 1usize..100_000, count1 in 1usize..100_000) {
            let w = derive_class_weights(count0, count1).unwrap();
            if count0 >= count1 {
                prop_assert_eq!(w.w0, 1.0);
                prop_assert!(w.w1 >= 1.0);
            }
            if count1 >= count0 {
                prop_assert_eq!(w.w1, 1.0);
                prop_assert!(w.w0 >= 1.0);
            }
        }

        #[test]
        fn integer_scaling_preserves_weights(count0 in 1usize..500, count1 in 1usize..500, k in 1usize..20) {
            // Scaling both counts by k leaves the rational ratio, and so
            // its floor, unchanged.
            let a = derive_class_weights(count0 * k, count1 * k).unwrap();
            let b = derive_class_weights(count0, count1).unwrap();
            prop_assert_eq!((a.w0, a.w1), (b.w0, b.w1));
        }

        #[test]
        fn undersample_size_and_subset(
            lens in prop::collection::vec(1usize..10, 1..40),
            seed in 0u64..100) {
            let pool: Vec<BinarySample> = lens
                .iter()
                .enumerate()
                .map(|(i, &l)| sample(&format!("s{i}"), l))
                .collect();
            let target = seed as usize % (pool.len() + 1);
            let kept = undersample(&pool, target, seed).unwrap();
            prop_assert_eq!(kept.len(), target);
            for k in &kept {
                prop_assert!(pool.iter().any(|p| p == k));
            }
        }
    }
}
