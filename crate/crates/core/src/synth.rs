//! Synthetic voted-corpus generator for experiments and tests.
//!
//! Samples are sequences of made-up Persian-letter tokens. Each emotion has
//! its own reserved signal tokens; a sample that is truly positive for an
//! emotion carries each of that emotion's signals with probability
//! `1 - noise`, while negative samples never do. Votes come from five
//! simulated annotators who each read the true label and report it
//! correctly with probability `annotator_accuracy`, which spreads the vote
//! counts realistically across 0..=5.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Emotion, LabelSet, VotedDataset, VotedSample, Votes};
use crate::error::{Error, Result};

/// Letters used to build synthetic tokens. All are ordinary Persian
/// consonants and vowels, so generated texts pass normalization unchanged.
const LETTERS: [char; 24] = [
    'ب', 'پ', 'ت', 'ج', 'چ', 'ح', 'خ', 'د', 'ر', 'ز', 'ژ', 'س', 'ش', 'ف', 'ق', 'ک', 'گ', 'ل',
    'م', 'ن', 'و', 'ه', 'ی', 'ا',
];

/// Tokens the normalizer would glue to a neighbor; never generated.
const AFFIX_BLOCKLIST: [&str; 8] = [
    "\u{0645}\u{06cc}",                         // می
    "\u{0646}\u{0645}\u{06cc}",                 // نمی
    "\u{0647}\u{0627}",                         // ها
    "\u{0647}\u{0627}\u{06cc}",                 // های
    "\u{0647}\u{0627}\u{06cc}\u{06cc}",         // هایی
    "\u{062a}\u{0631}",                         // تر
    "\u{062a}\u{0631}\u{06cc}",                 // تری
    "\u{062a}\u{0631}\u{06cc}\u{0646}",         // ترین
];

fn default_accuracy() -> f64 {
    0.9
}

/// Parameters of the synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Number of samples to generate.
    pub n_samples: usize,
    /// Majority:minority odds; a sample is positive for each emotion with
    /// probability `1 / (1 + imbalance_ratio)`.
    pub imbalance_ratio: f64,
    /// Signal tokens reserved per emotion.
    pub n_signal_tokens: usize,
    /// Total vocabulary size, signal tokens included.
    pub vocab_size: usize,
    /// Probability that a positive sample omits any given signal token.
    pub noise: f64,
    /// Probability that a simulated annotator reports the true label.
    #[serde(default = "default_accuracy")]
    pub annotator_accuracy: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".to_string()));
        }
        if !(self.imbalance_ratio >= 1.0 && self.imbalance_ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "imbalance_ratio must be >= 1, got {}",
                self.imbalance_ratio
            )));
        }
        if self.n_signal_tokens == 0 {
            return Err(Error::InvalidConfig(
                "n_signal_tokens must be >= 1".to_string(),
            ));
        }
        if self.vocab_size <= Emotion::COUNT * self.n_signal_tokens {
            return Err(Error::InvalidConfig(format!(
                "vocab_size {} leaves no filler tokens after {} signals",
                self.vocab_size,
                Emotion::COUNT * self.n_signal_tokens
            )));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidConfig(format!(
                "noise must be in [0, 1), got {}",
                self.noise
            )));
        }
        if !(self.annotator_accuracy > 0.5 && self.annotator_accuracy <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "annotator_accuracy must be in (0.5, 1], got {}",
                self.annotator_accuracy
            )));
        }
        Ok(())
    }
}

/// A generated corpus plus the ground truth that the votes approximate.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub dataset: VotedDataset,
    /// True label set per sample, aligned with `dataset`.
    pub truth: Vec<LabelSet>,
    /// Signal tokens per emotion, in canonical emotion order.
    pub signals: Vec<Vec<String>>,
}

fn has_stretch(token: &str) -> bool {
    let chars: Vec<char> = token.chars().collect();
    chars.windows(3).any(|w| w[0] == w[1] && w[1] == w[2])
}

fn make_vocabulary(rng: &mut ChaCha8Rng, total: usize) -> Vec<String> {
    let mut seen = HashSet::with_capacity(total);
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        let len = rng.gen_range(3..=6);
        let token: String = (0..len)
            .map(|_| LETTERS[rng.gen_range(0..LETTERS.len())])
            .collect();
        if has_stretch(&token) || AFFIX_BLOCKLIST.contains(&token.as_str()) {
            continue;
        }
        if seen.insert(token.clone()) {
            out.push(token);
        }
    }
    out
}

/// Generates the corpus described by `spec`. Fully deterministic: the same
/// spec always yields the same corpus, truth, and signal tokens.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocabulary = make_vocabulary(&mut rng, spec.vocab_size);
    let n_sig = spec.n_signal_tokens;
    let signals: Vec<Vec<String>> = (0..Emotion::COUNT)
        .map(|e| vocabulary[e * n_sig..(e + 1) * n_sig].to_vec())
        .collect();
    let fillers = &vocabulary[Emotion::COUNT * n_sig..];

    let p_positive = 1.0 / (1.0 + spec.imbalance_ratio);
    let width = spec.n_samples.saturating_sub(1).to_string().len().max(4);
    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut truth = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let mut flags = [false; 6];
        for flag in &mut flags {
            *flag = rng.gen_bool(p_positive);
        }

        let base_len = rng.gen_range(8..=16);
        let mut tokens: Vec<&str> = (0..base_len)
            .map(|_| fillers[rng.gen_range(0..fillers.len())].as_str())
            .collect();
        for emotion in Emotion::ALL {
            if !flags[emotion.index()] {
                continue;
            }
            for signal in &signals[emotion.index()] {
                if rng.gen_bool(1.0 - spec.noise) {
                    let pos = rng.gen_range(0..=tokens.len());
                    tokens.insert(pos, signal);
                }
            }
        }

        let mut counts = [0u8; 6];
        for (e, count) in counts.iter_mut().enumerate() {
            let p_yes = if flags[e] {
                spec.annotator_accuracy
            } else {
                1.0 - spec.annotator_accuracy
            };
            for _ in 0..Votes::MAX_VOTE {
                if rng.gen_bool(p_yes) {
                    *count += 1;
                }
            }
        }

        samples.push(VotedSample::new(
            format!("synth-{i:0width$}"),
            tokens.join(" "),
            Votes::new(counts)?,
        )?);
        truth.push(LabelSet::new(flags));
    }

    Ok(SynthCorpus {
        dataset: VotedDataset::new(samples)?,
        truth,
        signals,
    })
}
