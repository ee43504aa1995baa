//! Mutation-based augmentation of minority-class samples: token swap,
//! synonym replacement, word insertion, and word deletion, with per-emotion
//! default intensities.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BinarySample, Emotion, LabeledDataset, LabelMode, Origin};
use crate::error::{Error, Result};

/// How the per-operation probabilities are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMode {
    /// Each site fires with `p / tokens`, so `p` is the expected number of
    /// operations per sentence regardless of its length.
    #[default]
    PerSentence,
    /// Each site fires with the raw `p`.
    PerWord,
}

/// Intensities for one augmentation pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub swap_p: f64,
    pub replace_p: f64,
    pub insert_p: f64,
    pub delete_p: f64,
    /// Augmented samples generated per original.
    pub n_aug: usize,
    #[serde(default)]
    pub p_mode: PMode,
}

impl AugmentConfig {
    pub fn new(
        swap_p: f64,
        replace_p: f64,
        insert_p: f64,
        delete_p: f64,
        n_aug: usize,
    ) -> Result<Self> {
        let cfg = AugmentConfig {
            swap_p,
            replace_p,
            insert_p,
            delete_p,
            n_aug,
            p_mode: PMode::PerSentence,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("swap_p", self.swap_p),
            ("replace_p", self.replace_p),
            ("insert_p", self.insert_p),
            ("delete_p", self.delete_p),
        ] {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-emotion augmentation intensities tuned for the tweet corpus.
pub fn default_config(emotion: Emotion) -> AugmentConfig {
    let (swap_p, replace_p, insert_p, delete_p, n_aug) = match emotion {
        Emotion::Anger => (0.6, 0.6, 0.3, 0.3, 10),
        Emotion::Fear => (0.6, 0.6, 0.5, 0.4, 20),
        Emotion::Happiness => (0.6, 0.6, 0.5, 0.4, 20),
        Emotion::Hatred => (0.6, 0.6, 0.3, 0.3, 10),
        Emotion::Sadness => (0.6, 0.6, 0.3, 0.3, 10),
        Emotion::Wonder => (0.6, 0.6, 0.4, 0.4, 15),
    };
    AugmentConfig {
        swap_p,
        replace_p,
        insert_p,
        delete_p,
        n_aug,
        p_mode: PMode::PerSentence,
    }
}

/// Supplies candidate words for replacement and insertion. Implementations
/// must be deterministic; the caller's RNG picks among the candidates.
pub trait WordProvider {
    /// Replacement candidates for `word`, possibly empty.
    fn synonyms(&self, word: &str) -> Vec<String>;

    /// Insertion candidates between `left` and `right` (either may be
    /// absent at the sentence boundary), possibly empty.
    fn insertables(&self, left: Option<&str>, right: Option<&str>) -> Vec<String>;
}

/// Synonym-lexicon provider backed by a TSV file
/// (`word<TAB>synonym1<TAB>synonym2…`). Insertion candidates are the
/// synonyms of the neighboring words.
#[derive(Debug, Clone)]
pub struct StaticLexiconProvider {
    synonyms: HashMap<String, Vec<String>>,
}

impl StaticLexiconProvider {
    pub fn from_tsv(tsv: &str) -> Result<Self> {
        let mut synonyms = HashMap::new();
        for (lineno, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let word = parts.next().unwrap_or_default();
            let candidates: Vec<String> =
                parts.filter(|s| !s.is_empty()).map(str::to_string).collect();
            if word.is_empty() || candidates.is_empty() {
                return Err(Error::MalformedRow {
                    line: lineno + 1,
                    msg: "expected `word<TAB>synonym…`".to_string(),
                });
            }
            synonyms.insert(word.to_string(), candidates);
        }
        Ok(Self { synonyms })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_tsv(include_str!("../data/synonyms.tsv")).expect("bundled lexicon parses")
    }
}

impl WordProvider for StaticLexiconProvider {
    fn synonyms(&self, word: &str) -> Vec<String> {
        self.synonyms.get(word).cloned().unwrap_or_default()
    }

    fn insertables(&self, left: Option<&str>, right: Option<&str>) -> Vec<String> {
        let mut out = Vec::new();
        for ctx in [left, right].into_iter().flatten() {
            for syn in self.synonyms(ctx) {
                if !out.contains(&syn) {
                    out.push(syn);
                }
            }
        }
        out
    }
}

/// Generates `cfg.n_aug` variants of `text`, each from an independent RNG
/// stream of `seed`, by applying swap, replacement, insertion, and deletion
/// in that order. Never returns an empty sentence.
pub fn augment_sample(
    text: &str,
    cfg: &AugmentConfig,
    provider: &dyn WordProvider,
    seed: u64,
) -> Result<Vec<String>> {
    cfg.validate()?;
    let base: Vec<&str> = text.split_whitespace().collect();
    if base.is_empty() {
        return Err(Error::EmptyText { id: String::new() });
    }
    let mut out = Vec::with_capacity(cfg.n_aug);
    for stream in 0..cfg.n_aug {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        let tokens: Vec<String> = base.iter().map(|t| t.to_string()).collect();
        out.push(mutate(tokens, cfg, provider, &mut rng).join(" "));
    }
    Ok(out)
}

fn site_p(p: f64, tokens: usize, mode: PMode) -> f64 {
    match mode {
        PMode::PerSentence => p / tokens as f64,
        PMode::PerWord => p,
    }
}

fn mutate(
    mut tokens: Vec<String>,
    cfg: &AugmentConfig,
    provider: &dyn WordProvider,
    rng: &mut ChaCha8Rng,
) -> Vec<String> {
    // Swap: every adjacent pair is an independent site.
    let p = site_p(cfg.swap_p, tokens.len(), cfg.p_mode);
    for i in 0..tokens.len().saturating_sub(1) {
        if p > 0.0 && rng.gen_bool(p) {
            tokens.swap(i, i + 1);
        }
    }

    // Replacement: only tokens with candidates consume randomness.
    let p = site_p(cfg.replace_p, tokens.len(), cfg.p_mode);
    for tok in tokens.iter_mut() {
        let candidates = provider.synonyms(tok);
        if !candidates.is_empty() && p > 0.0 && rng.gen_bool(p) {
            *tok = candidates[rng.gen_range(0..candidates.len())].clone();
        }
    }

    // Insertion: a single whole-sentence event at a uniform position.
    if cfg.insert_p > 0.0 && rng.gen_bool(cfg.insert_p) {
        let pos = rng.gen_range(0..=tokens.len());
        let left = pos.checked_sub(1).map(|i| tokens[i].as_str());
        let right = tokens.get(pos).map(String::as_str);
        let candidates = provider.insertables(left, right);
        if !candidates.is_empty() {
            let word = candidates[rng.gen_range(0..candidates.len())].clone();
            tokens.insert(pos, word);
        }
    }

    // Deletion: all marks are drawn against the stage-start length so the
    // count is exactly binomial; the guard then keeps the first token
    // rather than emptying the sentence.
    let p = site_p(cfg.delete_p, tokens.len(), cfg.p_mode);
    let marks: Vec<bool> = tokens
        .iter()
        .map(|_| p > 0.0 && rng.gen_bool(p))
        .collect();
    let survivors: Vec<String> = tokens
        .iter()
        .zip(&marks)
        .filter(|(_, &m)| !m)
        .map(|(t, _)| t.clone())
        .collect();
    if survivors.is_empty() {
        vec![tokens.swap_remove(0)]
    } else {
        survivors
    }
}

/// Appends `cfg.n_aug` augmented children after every label-1 sample of a
/// binary dataset. Children carry ids `{parent}-aug{k}`, the parent's label,
/// and an augmented-origin marker; label-0 samples pass through untouched.
pub fn expand_minority(
    ds: &LabeledDataset,
    cfg: &AugmentConfig,
    provider: &dyn WordProvider,
    seed: u64,
) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mode = match ds.mode() {
        LabelMode::Binary(emotion) => LabelMode::Binary(emotion),
        LabelMode::Multi => {
            return Err(Error::ShapeMismatch(
                "augmentation requires a binary-labeled dataset".to_string(),
            ))
        }
    };
    let mut out = Vec::with_capacity(ds.len());
    for (index, sample) in ds.samples().iter().enumerate() {
        out.push(sample.clone());
        if sample.labels.binary_label() != Some(true) {
            continue;
        }
        let child_seed = seed ^ index as u64;
        for (k, text) in augment_sample(&sample.text, cfg, provider, child_seed)?
            .into_iter()
            .enumerate()
        {
            out.push(BinarySample {
                id: format!("{}-aug{}", sample.id, k + 1),
                text,
                labels: sample.labels.clone(),
                origin: Origin::Augmented {
                    parent: sample.id.clone(),
                },
            });
        }
    }
    LabeledDataset::new(mode, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Labels, LabelSet};
    use proptest::prelude::*;

    struct NoWords;

    impl WordProvider for NoWords {
        fn synonyms(&self, _: &str) -> Vec<String> {
            Vec::new()
        }
        fn insertables(&self, _: Option<&str>, _: Option<&str>) -> Vec<String> {
            Vec::new()
        }
    }

    /// Every word has exactly one synonym: itself tagged with a prime.
    struct Primed;

    impl WordProvider for Primed {
        fn synonyms(&self, word: &str) -> Vec<String> {
            vec![format!("{word}'")]
        }
        fn insertables(&self, left: Option<&str>, right: Option<&str>) -> Vec<String> {
            [left, right]
                .into_iter()
                .flatten()
                .map(|w| format!("{w}+"))
                .collect()
        }
    }

    fn zero_cfg(n_aug: usize) -> AugmentConfig {
        AugmentConfig::new(0.0, 0.0, 0.0, 0.0, n_aug).unwrap()
    }

    #[test]
    fn table_defaults_per_emotion() {
        let anger = default_config(Emotion::Anger);
        assert_eq!(
            (anger.swap_p, anger.replace_p, anger.insert_p, anger.delete_p, anger.n_aug),
            (0.6, 0.6, 0.3, 0.3, 10)
        );
        let fear = default_config(Emotion::Fear);
        assert_eq!(
            (fear.swap_p, fear.replace_p, fear.insert_p, fear.delete_p, fear.n_aug),
            (0.6, 0.6, 0.5, 0.4, 20)
        );
        let wonder = default_config(Emotion::Wonder);
        assert_eq!(
            (wonder.swap_p, wonder.replace_p, wonder.insert_p, wonder.delete_p, wonder.n_aug),
            (0.6, 0.6, 0.4, 0.4, 15)
        );
        assert_eq!(default_config(Emotion::Happiness).n_aug, 20);
        assert_eq!(default_config(Emotion::Hatred).n_aug, 10);
        assert_eq!(default_config(Emotion::Sadness).n_aug, 10);
    }

    #[test]
    fn zero_probabilities_copy_the_input() {
        let got = augment_sample("a b c", &zero_cfg(3), &NoWords, 7).unwrap();
        assert_eq!(got, vec!["a b c"; 3]);
    }

    #[test]
    fn n_aug_zero_yields_no_outputs() {
        assert!(augment_sample("a b", &zero_cfg(0), &NoWords, 7).unwrap().is_empty());
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(augment_sample("   ", &zero_cfg(1), &NoWords, 7).is_err());
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        assert!(AugmentConfig::new(1.1, 0.0, 0.0, 0.0, 1).is_err());
        assert!(AugmentConfig::new(0.0, -0.1, 0.0, 0.0, 1).is_err());
        assert!(AugmentConfig::new(0.0, 0.0, f64::NAN, 0.0, 1).is_err());
    }

    #[test]
    fn determinism_and_stream_independence() {
        let cfg = AugmentConfig::new(0.8, 0.8, 0.8, 0.3, 8).unwrap();
        let a = augment_sample("a b c d e f", &cfg, &Primed, 42).unwrap();
        let b = augment_sample("a b c d e f", &cfg, &Primed, 42).unwrap();
        assert_eq!(a, b);
        let c = augment_sample("a b c d e f", &cfg, &Primed, 43).unwrap();
        assert_ne!(a, c);
        // Streams differ from one another as well.
        assert!(a.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn per_word_mode_applies_raw_probabilities() {
        let mut cfg = AugmentConfig::new(1.0, 0.0, 0.0, 0.0, 4).unwrap();
        cfg.p_mode = PMode::PerWord;
        // With p=1 per pair the first pair always swaps; sequential swaps
        // then carry the first token all the way right.
        let got = augment_sample("a b", &cfg, &NoWords, 9).unwrap();
        assert_eq!(got, vec!["b a"; 4]);
    }

    #[test]
    fn replacement_draws_from_the_provider() {
        let mut cfg = AugmentConfig::new(0.0, 1.0, 0.0, 0.0, 3).unwrap();
        cfg.p_mode = PMode::PerWord;
        let got = augment_sample("x y", &cfg, &Primed, 5).unwrap();
        assert_eq!(got, vec!["x' y'"; 3]);
    }

    #[test]
    fn insertion_adds_exactly_one_context_word() {
        let cfg = AugmentConfig::new(0.0, 0.0, 1.0, 0.0, 16).unwrap();
        for variant in augment_sample("x y", &cfg, &Primed, 11).unwrap() {
            let tokens: Vec<&str> = variant.split_whitespace().collect();
            assert_eq!(tokens.len(), 3);
            assert!(tokens.iter().any(|t| t.ends_with('+')));
        }
    }

    #[test]
    fn single_token_survives_full_deletion() {
        let cfg = AugmentConfig::new(0.0, 0.0, 0.0, 1.0, 32).unwrap();
        for variant in augment_sample("solo", &cfg, &NoWords, 3).unwrap() {
            assert_eq!(variant, "solo");
        }
    }

    #[test]
    fn deletion_rate_matches_binomial_expectation() {
        // delete_p = 1 over 20 tokens means each token drops with p = 1/20,
        // one expected deletion per variant. The mean over 10,000 variants
        // must sit within 3 standard errors of that.
        let n_tokens = 20usize;
        let trials = 10_000usize;
        let cfg = AugmentConfig::new(0.0, 0.0, 0.0, 1.0, trials).unwrap();
        let text = (0..n_tokens).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let variants = augment_sample(&text, &cfg, &NoWords, 1234).unwrap();
        let total_deleted: usize = variants
            .iter()
            .map(|v| n_tokens - v.split_whitespace().count())
            .sum();
        let mean = total_deleted as f64 / trials as f64;
        let p = 1.0 / n_tokens as f64;
        let sigma_one = (n_tokens as f64 * p * (1.0 - p)).sqrt();
        let band = 3.0 * sigma_one / (trials as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= band,
            "mean deletions {mean} outside 1.0 ± {band}"
        );
    }

    fn binary_ds(pos: usize, neg: usize) -> LabeledDataset {
        let mut samples = Vec::new();
        for i in 0..pos {
            samples.push(BinarySample {
                id: format!("p{i}"),
                text: "a b c d".to_string(),
                labels: Labels::Binary { emotion: Emotion::Anger, label: true },
                origin: Origin::Original,
            });
        }
        for i in 0..neg {
            samples.push(BinarySample {
                id: format!("n{i}"),
                text: "e f g h".to_string(),
                labels: Labels::Binary { emotion: Emotion::Anger, label: false },
                origin: Origin::Original,
            });
        }
        LabeledDataset::new(LabelMode::Binary(Emotion::Anger), samples).unwrap()
    }

    #[test]
    fn expand_minority_grows_only_label_one() {
        let ds = binary_ds(100, 1000);
        let mut cfg = default_config(Emotion::Anger);
        cfg.n_aug = 10;
        let grown = expand_minority(&ds, &cfg, &StaticLexiconProvider::builtin(), 99).unwrap();
        let pos = grown
            .samples()
            .iter()
            .filter(|s| s.labels.binary_label() == Some(true))
            .count();
        let neg = grown.len() - pos;
        assert_eq!(pos, 1100);
        assert_eq!(neg, 1000);
        // Parents keep their text; children sit right after their parent
        // and point back to it.
        assert_eq!(grown.samples()[0].id, "p0");
        assert_eq!(grown.samples()[0].text, "a b c d");
        assert_eq!(grown.samples()[1].id, "p0-aug1");
        assert!(matches!(
            &grown.samples()[1].origin,
            Origin::Augmented { parent } if parent == "p0"
        ));
    }

    #[test]
    fn n_aug_zero_keeps_dataset_identical() {
        let ds = binary_ds(3, 5);
        let grown = expand_minority(&ds, &zero_cfg(0), &NoWords, 1).unwrap();
        assert_eq!(grown.samples(), ds.samples());
    }

    #[test]
    fn multilabel_dataset_is_rejected() {
        let samples = vec![BinarySample {
            id: "m0".to_string(),
            text: "a".to_string(),
            labels: Labels::Multi(LabelSet::default()),
            origin: Origin::Original,
        }];
        let ds = LabeledDataset::new(LabelMode::Multi, samples).unwrap();
        assert!(expand_minority(&ds, &zero_cfg(1), &NoWords, 1).is_err());
    }

    #[test]
    fn expand_is_deterministic_per_seed() {
        let ds = binary_ds(5, 5);
        let cfg = default_config(Emotion::Fear);
        let provider = StaticLexiconProvider::builtin();
        let a = expand_minority(&ds, &cfg, &provider, 7).unwrap();
        let b = expand_minority(&ds, &cfg, &provider, 7).unwrap();
        assert_eq!(a.samples(), b.samples());
    }

    proptest! {
        #[test]
        fn outputs_never_empty_and_bounded(
            len in 1usize..12,
            swap_p in 0.0f64..=1.0,
            replace_p in 0.0f64..=1.0,
            insert_p in 0.0f64..=1.0,
            delete_p in 0.0f64..=1.0,
            seed in 0u64..1000) {
            let text = (0..len).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ");
            let cfg = AugmentConfig::new(swap_p, replace_p, insert_p, delete_p, 4).unwrap();
            for variant in augment_sample(&text, &cfg, &Primed, seed).unwrap() {
                let count = variant.split_whitespace().count();
                prop_assert!(count >= 1);
                prop_assert!(count <= len + 1);
            }
        }

        #[test]
        fn insertion_only_grows_by_at_most_one(len in 1usize..10, seed in 0u64..200) {
            let text = (0..len).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ");
            let cfg = AugmentConfig::new(0.0, 0.0, 1.0, 0.0, 3).unwrap();
            for variant in augment_sample(&text, &cfg, &Primed, seed).unwrap() {
                let count = variant.split_whitespace().count();
                prop_assert!(count == len || count == len + 1);
            }
        }
    }
}
