//! Data model for voted and binary-labeled tweet corpora.
//!
//! A corpus starts life as [`VotedSample`]s (raw text plus per-emotion
//! annotator vote counts in 0..=5) and is turned into [`BinarySample`]s by a
//! selection policy. Datasets are immutable after construction and enforce
//! unique ids and homogeneous label kinds.

mod io;

pub use io::{load_labeled, load_voted, write_labeled, write_voted, Format};

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Ekman's six basic emotions, in the canonical order used everywhere
/// iteration order matters (vote columns, label sets, report rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Fear,
    Happiness,
    Hatred,
    Sadness,
    Wonder,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Happiness,
        Emotion::Hatred,
        Emotion::Sadness,
        Emotion::Wonder,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Happiness => "happiness",
            Emotion::Hatred => "hatred",
            Emotion::Sadness => "sadness",
            Emotion::Wonder => "wonder",
        }
    }
}

impl std::str::FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown emotion: {s:?}")))
    }
}

impl std::fmt::Display for Emotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-emotion annotator vote counts, each in 0..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Votes([u8; 6]);

impl Votes {
    pub const MAX_VOTE: u8 = 5;

    pub fn new(counts: [u8; 6]) -> Result<Self> {
        for (emotion, &v) in Emotion::ALL.iter().zip(&counts) {
            if v > Self::MAX_VOTE {
                return Err(Error::VoteOutOfRange {
                    line: 0,
                    field: emotion.name(),
                    value: v as i64,
                });
            }
        }
        Ok(Votes(counts))
    }

    pub fn get(&self, emotion: Emotion) -> u8 {
        self.0[emotion.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, u8)> + '_ {
        Emotion::ALL.into_iter().map(move |e| (e, self.get(e)))
    }

    pub fn as_array(&self) -> [u8; 6] {
        self.0
    }
}

/// A raw tweet with its crowdsourced vote counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VotedSample {
    pub id: String,
    pub text: String,
    pub votes: Votes,
}

impl VotedSample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, votes: Votes) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyText { id });
        }
        Ok(VotedSample { id, text, votes })
    }
}

/// Multi-label assignment: one 0/1 flag per emotion, canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelSet([bool; 6]);

impl LabelSet {
    pub fn new(flags: [bool; 6]) -> Self {
        LabelSet(flags)
    }

    pub fn get(&self, emotion: Emotion) -> bool {
        self.0[emotion.index()]
    }

    pub fn set(&mut self, emotion: Emotion, value: bool) {
        self.0[emotion.index()] = value;
    }

    pub fn as_array(&self) -> [bool; 6] {
        self.0
    }

    pub fn positives(&self) -> impl Iterator<Item = Emotion> + '_ {
        Emotion::ALL.into_iter().filter(move |e| self.get(*e))
    }
}

/// Label payload of a [`BinarySample`]: a single-emotion 0/1 flag in binary
/// mode, or all six flags in multi-label mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Labels {
    Binary { emotion: Emotion, label: bool },
    Multi(LabelSet),
}

impl Labels {
    pub fn binary_label(&self) -> Option<bool> {
        match self {
            Labels::Binary { label, .. } => Some(*label),
            Labels::Multi(_) => None,
        }
    }
}

/// Whether a sample came from the corpus or from augmentation, and if the
/// latter, which original it was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Original,
    Augmented { parent: String },
}

/// A pre-processed, labeled sample; the unit of training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySample {
    pub id: String,
    pub text: String,
    pub labels: Labels,
    pub origin: Origin,
}

/// Label homogeneity marker for a [`LabeledDataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    Binary(Emotion),
    Multi,
}

/// An ordered, id-unique collection of voted samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VotedDataset {
    samples: Vec<VotedSample>,
}

impl VotedDataset {
    pub fn new(samples: Vec<VotedSample>) -> Result<Self> {
        check_unique_ids(samples.iter().map(|s| s.id.as_str()))?;
        Ok(VotedDataset { samples })
    }

    pub fn samples(&self) -> &[VotedSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Deterministic train/eval partition with `round(eval_fraction * n)`
    /// eval samples. Relative order of the input is preserved on both sides.
    pub fn split(&self, eval_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let (train_idx, eval_idx) = split_indices(self.len(), eval_fraction, seed)?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| self.samples[i].clone()).collect();
        Ok((
            VotedDataset {
                samples: pick(&train_idx),
            },
            VotedDataset {
                samples: pick(&eval_idx),
            },
        ))
    }
}

/// An ordered, id-unique collection of binary or multi-label samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<BinarySample>,
    mode: LabelMode,
}

impl LabeledDataset {
    pub fn new(mode: LabelMode, samples: Vec<BinarySample>) -> Result<Self> {
        check_unique_ids(samples.iter().map(|s| s.id.as_str()))?;
        for s in &samples {
            let ok = match (&s.labels, mode) {
                (Labels::Binary { emotion, .. }, LabelMode::Binary(m)) => *emotion == m,
                (Labels::Multi(_), LabelMode::Multi) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::MixedLabels { id: s.id.clone() });
            }
        }
        Ok(LabeledDataset { samples, mode })
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn samples(&self) -> &[BinarySample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<BinarySample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn split(&self, eval_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let (train_idx, eval_idx) = split_indices(self.len(), eval_fraction, seed)?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| self.samples[i].clone()).collect();
        Ok((
            LabeledDataset {
                samples: pick(&train_idx),
                mode: self.mode,
            },
            LabeledDataset {
                samples: pick(&eval_idx),
                mode: self.mode,
            },
        ))
    }
}

fn check_unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId { id: id.to_string() });
        }
    }
    Ok(())
}

/// Shared partition logic: shuffle indices with a seeded RNG, take the first
/// `round(fraction * n)` for eval, and restore original order on both sides.
fn split_indices(n: usize, eval_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::TooFewSamples { n });
    }
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::DegenerateSplit {
            fraction: eval_fraction,
            n,
        });
    }
    let n_eval = (eval_fraction * n as f64).round() as usize;
    if n_eval == 0 || n_eval == n {
        return Err(Error::DegenerateSplit {
            fraction: eval_fraction,
            n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut eval_idx: Vec<usize> = indices[..n_eval].to_vec();
    let mut train_idx: Vec<usize> = indices[n_eval..].to_vec();
    eval_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((train_idx, eval_idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn voted(id: &str, counts: [u8; 6]) -> VotedSample {
        VotedSample::new(id, format!("tweet {id}"), Votes::new(counts).unwrap()).unwrap()
    }

    fn toy_dataset(n: usize) -> VotedDataset {
        let samples = (0..n).map(|i| voted(&format!("t{i}"), [0; 6])).collect();
        VotedDataset::new(samples).unwrap()
    }

    #[test]
    fn emotion_order_is_stable() {
        let names: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
        assert_eq!(
            names,
            ["anger", "fear", "happiness", "hatred", "sadness", "wonder"]
        );
        for (i, e) in Emotion::ALL.into_iter().enumerate() {
            assert_eq!(e.index(), i);
        }
    }

    #[test]
    fn votes_reject_out_of_range() {
        assert!(Votes::new([0, 0, 0, 0, 0, 5]).is_ok());
        let err = Votes::new([6, 0, 0, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::VoteOutOfRange { field: "anger", value: 6, .. }));
    }

    #[test]
    fn empty_text_rejected() {
        let err = VotedSample::new("t1", "", Votes::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyText { .. }));
        let err = VotedSample::new("t2", " \t\n ", Votes::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyText { .. }));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let samples = vec![voted("a", [0; 6]), voted("a", [1, 0, 0, 0, 0, 0])];
        assert!(matches!(
            VotedDataset::new(samples).unwrap_err(),
            Error::DuplicateId { .. }
        ));
    }

    #[test]
    fn mixed_labels_rejected() {
        let b = BinarySample {
            id: "x".into(),
            text: "t".into(),
            labels: Labels::Binary {
                emotion: Emotion::Fear,
                label: true,
            },
            origin: Origin::Original,
        };
        assert!(matches!(
            LabeledDataset::new(LabelMode::Multi, vec![b.clone()]).unwrap_err(),
            Error::MixedLabels { .. }
        ));
        // Binary mode must also carry the *right* emotion.
        assert!(LabeledDataset::new(LabelMode::Binary(Emotion::Anger), vec![b]).is_err());
    }

    #[test]
    fn split_90_10() {
        let ds = toy_dataset(100);
        let (train, eval) = ds.split(0.10, 42).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(eval.len(), 10);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy_dataset(50);
        let a = ds.split(0.2, 7).unwrap();
        let b = ds.split(0.2, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = toy_dataset(10);
        assert!(ds.split(0.01, 1).is_err()); // rounds to 0 eval
        assert!(ds.split(0.99, 1).is_err()); // rounds to empty train
        assert!(toy_dataset(1).split(0.5, 1).is_err());
    }

    // Different seeds generally yield different partitions, and every
    // (fraction, seed) pair must still be a partition of the input.
    #[test]
    fn split_seeds_differ_but_partition_holds() {
        let ds = toy_dataset(10);
        let mut saw_difference = false;
        for seed in 0..10u64 {
            let (train, eval) = ds.split(0.5, seed).unwrap();
            assert_eq!(train.len() + eval.len(), 10);
            let mut ids: Vec<&str> = train
                .samples()
                .iter()
                .chain(eval.samples())
                .map(|s| s.id.as_str())
                .collect();
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), 10, "partition lost or duplicated ids");
            if seed > 0 {
                let (t0, _) = ds.split(0.5, 0).unwrap();
                if t0 != train {
                    saw_difference = true;
                }
            }
        }
        assert!(saw_difference, "all seeds produced identical partitions");
    }
}
