//! Turning annotator vote counts into training labels.
//!
//! Two policies. The threshold policy keeps every sample and labels an
//! emotion positive when its vote count reaches the threshold. The
//! confidence policy drops samples with an ambiguous 2-or-3 vote for the
//! target emotion and keeps the rest as high-confidence negatives (0-1
//! votes) or positives (4-5 votes). Both are pure: no RNG, no mutation.

use crate::corpus::{
    BinarySample, Emotion, LabelMode, LabelSet, LabeledDataset, Labels, Origin, VotedDataset,
};
use crate::error::{Error, Result};

/// Label-selection policy, as configured on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// Positive iff votes >= t, with t in 1..=5.
    Threshold { t: u8 },
    /// Drop 2-3 votes for the target emotion; 0-1 negative, 4-5 positive.
    Confidence,
}

/// Multi-label annotation: an emotion is positive iff its vote count is at
/// least `t`. No samples are dropped.
pub fn apply_threshold(ds: &VotedDataset, t: u8) -> Result<LabeledDataset> {
    if !(1..=5).contains(&t) {
        return Err(Error::InvalidThreshold { t });
    }
    let samples = ds
        .samples()
        .iter()
        .map(|s| {
            let mut flags = [false; 6];
            for (emotion, votes) in s.votes.iter() {
                flags[emotion.index()] = votes >= t;
            }
            BinarySample {
                id: s.id.clone(),
                text: s.text.clone(),
                labels: Labels::Multi(LabelSet::new(flags)),
                origin: Origin::Original,
            }
        })
        .collect();
    LabeledDataset::new(LabelMode::Multi, samples)
}

/// Binary annotation for one emotion under the confidence policy. Samples
/// with 2 or 3 votes for `emotion` are dropped; the rest keep their relative
/// order. A sample dropped for one emotion may survive for another.
pub fn apply_confidence(ds: &VotedDataset, emotion: Emotion) -> Result<LabeledDataset> {
    let samples = ds
        .samples()
        .iter()
        .filter_map(|s| {
            let label = match s.votes.get(emotion) {
                0 | 1 => false,
                2 | 3 => return None,
                _ => true, // 4 or 5; label-5 tweets are always included
            };
            Some(BinarySample {
                id: s.id.clone(),
                text: s.text.clone(),
                labels: Labels::Binary { emotion, label },
                origin: Origin::Original,
            })
        })
        .collect();
    LabeledDataset::new(LabelMode::Binary(emotion), samples)
}
