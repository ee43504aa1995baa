//! One-shot experiment runner and the individual pipeline stages it chains:
//! select, preprocess, featurize, split, augment, balance, train, eval.
//!
//! Ordering rules: augmentation and undersampling run strictly after the
//! train/eval split and only on the train side, so the eval split is never
//! touched by either. Derived class weights use the train split's original
//! label counts, not the post-augmentation ones, mirroring how the weights
//! were tuned against the raw corpus imbalance.
//!
//! Every stage is a pure function of its persisted inputs, the config, and
//! the seed, so re-running a stage from its files reproduces its outputs
//! byte for byte. A failing stage leaves a `<stage>.failed` marker next to
//! the partial artifacts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{default_config, expand_minority, AugmentConfig, StaticLexiconProvider};
use crate::balance::{derive_class_weights, undersample, ClassWeights};
use crate::corpus::{
    load_voted, write_labeled, BinarySample, Emotion, Format, LabelMode, LabeledDataset, Labels,
    VotedDataset,
};
use crate::error::{Error, Result};
use crate::features::{compose, compose_segments, extract, split_composed, PosTagger, RuleTagger};
use crate::metrics::{emotion_metrics, hamming_loss, hamming_score, macro_f1, MetricsReport};
use crate::model::{
    predict, save_checkpoint, train, HashedFeaturizer, LinearModel, LossKind, TrainConfig,
    DEFAULT_DIM,
};
use crate::selection::{apply_confidence, apply_threshold, SelectionPolicy};
use crate::textprep::{builtin_vocabulary, load_vocabulary, normalize, PrepResources};

/// Whether the experiment trains six binary models or one six-head model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    BinaryPerEmotion,
    Multilabel,
}

/// Label-selection policy as written in the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionConfig {
    Confidence,
    Threshold { t: u8 },
}

impl SelectionConfig {
    pub fn policy(self) -> SelectionPolicy {
        match self {
            SelectionConfig::Confidence => SelectionPolicy::Confidence,
            SelectionConfig::Threshold { t } => SelectionPolicy::Threshold { t },
        }
    }
}

/// Optional file overrides for the bundled lookup resources. The dictionary
/// and transliteration tables must be overridden together, as must the two
/// POS tables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcePaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub en_fa_dict: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translit: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos_lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos_suffix: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<PathBuf>,
}

/// Input corpus, output directory, and resource overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    /// Input corpus format; defaults to jsonl.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default)]
    pub resources: ResourcePaths,
}

/// Train/eval partition parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub eval_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { eval_fraction: 0.1 }
    }
}

/// Class weights: either derived from the train split's label counts or
/// given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassWeightsConfig {
    Named(NamedWeights),
    Explicit { w0: f64, w1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedWeights {
    Derive,
}

/// Undersampling targets and class-weight policy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<ClassWeightsConfig>,
    /// Majority-class keep counts, keyed by emotion name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undersample: BTreeMap<String, usize>,
}

/// Hyperparameters for training, plus the feature-hashing dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub loss: LossKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_tokens: usize,
    pub dim: usize,
    pub stats_per_batch: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        TrainSection {
            loss: base.loss,
            lr: base.lr,
            epochs: base.epochs,
            batch_size: base.batch_size,
            max_tokens: base.max_tokens,
            dim: DEFAULT_DIM,
            stats_per_batch: base.stats_per_batch,
        }
    }
}

/// Full experiment description, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mode: PipelineMode,
    pub paths: PathsConfig,
    pub selection: SelectionConfig,
    #[serde(default)]
    pub split: SplitConfig,
    /// Per-emotion augmentation overrides; an empty table enables the
    /// per-emotion defaults for every emotion. Absent means no augmentation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<BTreeMap<String, AugmentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceSection>,
    #[serde(default)]
    pub train: TrainSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.paths.corpus.is_file() {
            return Err(Error::InvalidConfig(format!(
                "corpus file {} does not exist",
                self.paths.corpus.display()
            )));
        }
        if let Some(format) = &self.paths.format {
            format.parse::<Format>()?;
        }
        self.paths.resources.validate()?;

        if let SelectionConfig::Threshold { t } = self.selection {
            if !(1..=5).contains(&t) {
                return Err(Error::InvalidThreshold { t });
            }
        }
        if self.mode == PipelineMode::Multilabel {
            if self.selection == SelectionConfig::Confidence {
                return Err(Error::InvalidConfig(
                    "the confidence policy labels one emotion at a time and cannot \
                     feed a multilabel experiment; use the threshold policy"
                        .to_string(),
                ));
            }
            if self.augment.is_some() {
                return Err(Error::InvalidConfig(
                    "augmentation works on binary-labeled datasets; remove [augment] \
                     or switch to binary_per_emotion mode"
                        .to_string(),
                ));
            }
            if let Some(balance) = &self.balance {
                if !balance.undersample.is_empty() {
                    return Err(Error::InvalidConfig(
                        "undersampling works on binary-labeled datasets; remove \
                         [balance.undersample] or switch to binary_per_emotion mode"
                            .to_string(),
                    ));
                }
                if balance.class_weights == Some(ClassWeightsConfig::Named(NamedWeights::Derive)) {
                    return Err(Error::InvalidConfig(
                        "derived class weights need binary label counts; give explicit \
                         w0/w1 in multilabel mode"
                            .to_string(),
                    ));
                }
            }
        }

        let fraction = self.split.eval_fraction;
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eval_fraction must be in (0, 1), got {fraction}"
            )));
        }
        if let Some(overrides) = &self.augment {
            for (name, cfg) in overrides {
                name.parse::<Emotion>()?;
                cfg.validate()?;
            }
        }
        if let Some(balance) = &self.balance {
            for name in balance.undersample.keys() {
                name.parse::<Emotion>()?;
            }
            if let Some(ClassWeightsConfig::Explicit { w0, w1 }) = balance.class_weights {
                ClassWeights::new(w0, w1)?;
            }
        }

        let train = self.train;
        TrainConfig {
            loss: train.loss,
            lr: train.lr,
            epochs: train.epochs,
            batch_size: train.batch_size,
            max_tokens: train.max_tokens,
            ..TrainConfig::default()
        }
        .validate()?;
        HashedFeaturizer::new(train.dim, 0, train.max_tokens)?;
        Ok(())
    }

    fn corpus_format(&self) -> Format {
        self.paths
            .format
            .as_deref()
            .map(|s| s.parse().expect("validated above"))
            .unwrap_or(Format::Jsonl)
    }

    fn augment_for(&self, emotion: Emotion) -> Option<AugmentConfig> {
        self.augment.as_ref().map(|overrides| {
            overrides
                .get(emotion.name())
                .copied()
                .unwrap_or_else(|| default_config(emotion))
        })
    }

    fn undersample_target(&self, emotion: Emotion) -> Option<usize> {
        self.balance
            .as_ref()
            .and_then(|b| b.undersample.get(emotion.name()).copied())
    }
}

impl ResourcePaths {
    fn validate(&self) -> Result<()> {
        if self.en_fa_dict.is_some() != self.translit.is_some() {
            return Err(Error::InvalidConfig(
                "en_fa_dict and translit must be overridden together".to_string(),
            ));
        }
        if self.pos_lexicon.is_some() != self.pos_suffix.is_some() {
            return Err(Error::InvalidConfig(
                "pos_lexicon and pos_suffix must be overridden together".to_string(),
            ));
        }
        for path in [
            &self.en_fa_dict,
            &self.translit,
            &self.vocabulary,
            &self.pos_lexicon,
            &self.pos_suffix,
            &self.synonyms,
        ]
        .into_iter()
        .flatten()
        {
            if !path.is_file() {
                return Err(Error::InvalidConfig(format!(
                    "resource file {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Lookup tables shared by the text stages.
pub struct Resources {
    pub prep: PrepResources,
    pub vocabulary: HashSet<String>,
    pub tagger: RuleTagger,
    pub synonyms: StaticLexiconProvider,
}

impl Resources {
    pub fn builtin() -> Self {
        Resources {
            prep: PrepResources::builtin(),
            vocabulary: builtin_vocabulary(),
            tagger: RuleTagger::builtin(),
            synonyms: StaticLexiconProvider::builtin(),
        }
    }

    pub fn load(paths: &ResourcePaths) -> Result<Self> {
        paths.validate()?;
        let prep = match (&paths.en_fa_dict, &paths.translit) {
            (Some(dict), Some(translit)) => PrepResources::from_files(dict, translit)?,
            _ => PrepResources::builtin(),
        };
        let vocabulary = match &paths.vocabulary {
            Some(path) => load_vocabulary(path)?,
            None => builtin_vocabulary(),
        };
        let tagger = match (&paths.pos_lexicon, &paths.pos_suffix) {
            (Some(lexicon), Some(suffix)) => RuleTagger::from_files(lexicon, suffix)?,
            _ => RuleTagger::builtin(),
        };
        let synonyms = match &paths.synonyms {
            Some(path) => StaticLexiconProvider::from_file(path)?,
            None => StaticLexiconProvider::builtin(),
        };
        Ok(Resources {
            prep,
            vocabulary,
            tagger,
            synonyms,
        })
    }
}

/// Binary labels for one emotion: the confidence policy drops ambiguous
/// votes, the threshold policy keeps every sample.
pub fn select_binary(
    ds: &VotedDataset,
    policy: SelectionPolicy,
    emotion: Emotion,
) -> Result<LabeledDataset> {
    match policy {
        SelectionPolicy::Confidence => apply_confidence(ds, emotion),
        SelectionPolicy::Threshold { t } => {
            let multi = apply_threshold(ds, t)?;
            let samples = multi
                .into_samples()
                .into_iter()
                .map(|s| {
                    let label = match &s.labels {
                        Labels::Multi(set) => set.get(emotion),
                        Labels::Binary { .. } => unreachable!("threshold output is multilabel"),
                    };
                    BinarySample {
                        labels: Labels::Binary { emotion, label },
                        ..s
                    }
                })
                .collect();
            LabeledDataset::new(LabelMode::Binary(emotion), samples)
        }
    }
}

/// Multi-label annotation; only the threshold policy can produce one.
pub fn select_multi(ds: &VotedDataset, policy: SelectionPolicy) -> Result<LabeledDataset> {
    match policy {
        SelectionPolicy::Threshold { t } => apply_threshold(ds, t),
        SelectionPolicy::Confidence => Err(Error::InvalidConfig(
            "the confidence policy cannot produce a multilabel dataset".to_string(),
        )),
    }
}

/// Normalizes every text. Samples whose text normalizes to nothing (pure
/// emoji or punctuation tweets) are dropped.
pub fn preprocess_stage(ds: &LabeledDataset, prep: &PrepResources) -> Result<LabeledDataset> {
    let mut out = Vec::with_capacity(ds.len());
    for sample in ds.samples() {
        let (normalized, _) = normalize(&sample.text, prep);
        if normalized.is_empty() {
            continue;
        }
        out.push(BinarySample {
            text: normalized,
            ..sample.clone()
        });
    }
    LabeledDataset::new(ds.mode(), out)
}

/// Attaches the surface features of each raw text to its normalized text,
/// producing the composed five-segment training string. `raw` must contain
/// every id of `normalized` (it is the selection output the preprocessed
/// dataset came from).
pub fn featurize_stage(
    raw: &LabeledDataset,
    normalized: &LabeledDataset,
    res: &Resources,
) -> Result<LabeledDataset> {
    let raw_by_id: HashMap<&str, &str> = raw
        .samples()
        .iter()
        .map(|s| (s.id.as_str(), s.text.as_str()))
        .collect();
    let mut out = Vec::with_capacity(normalized.len());
    for sample in normalized.samples() {
        let raw_text = raw_by_id.get(sample.id.as_str()).ok_or_else(|| {
            Error::ShapeMismatch(format!("sample {} missing from the raw dataset", sample.id))
        })?;
        let bundle = extract(raw_text, &sample.text, &res.vocabulary, &res.tagger);
        out.push(BinarySample {
            text: compose(&sample.text, &bundle),
            ..sample.clone()
        });
    }
    LabeledDataset::new(normalized.mode(), out)
}

fn is_composed(ds: &LabeledDataset) -> bool {
    ds.samples()
        .iter()
        .all(|s| split_composed(&s.text).is_ok())
}

/// Rebuilds a composed string around a mutated body: emoji and hashtags are
/// inherited from the parent (mutations cannot touch them), misspellings and
/// POS tags are recomputed from the new body.
fn recompose(parent: &[String; 5], body: &str, res: &Resources) -> String {
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let pos: Vec<&str> = res
        .tagger
        .tag(&tokens)
        .iter()
        .map(|t| t.name())
        .collect::<Vec<_>>();
    let misspelled = crate::textprep::mark_misspelled(body, &res.vocabulary);
    compose_segments(&[
        body.to_string(),
        parent[1].clone(),
        parent[2].clone(),
        misspelled.join(" "),
        pos.join(" "),
    ])
}

/// Expands the minority class of a binary train split. On a composed
/// dataset the mutations run on the tweet-body segment and the feature
/// segments are refreshed around it; on a plain dataset they run on the
/// whole text.
pub fn augment_stage(
    train: &LabeledDataset,
    cfg: &AugmentConfig,
    res: &Resources,
    seed: u64,
) -> Result<LabeledDataset> {
    if !is_composed(train) {
        return expand_minority(train, cfg, &res.synonyms, seed);
    }
    let mut parents: HashMap<String, [String; 5]> = HashMap::with_capacity(train.len());
    let mut bodies = Vec::with_capacity(train.len());
    for sample in train.samples() {
        let segments = split_composed(&sample.text)?;
        bodies.push(BinarySample {
            text: segments[0].clone(),
            ..sample.clone()
        });
        parents.insert(sample.id.clone(), segments);
    }
    let body_ds = LabeledDataset::new(train.mode(), bodies)?;
    let expanded = expand_minority(&body_ds, cfg, &res.synonyms, seed)?;

    let composed_by_id: HashMap<&str, &BinarySample> =
        train.samples().iter().map(|s| (s.id.as_str(), s)).collect();
    let out = expanded
        .into_samples()
        .into_iter()
        .map(|s| match &s.origin {
            crate::corpus::Origin::Original => composed_by_id[s.id.as_str()].clone(),
            crate::corpus::Origin::Augmented { parent } => {
                let text = recompose(&parents[parent.as_str()], &s.text, res);
                BinarySample { text, ..s }
            }
        })
        .collect();
    LabeledDataset::new(train.mode(), out)
}

/// Keeps `target` majority-class (label-0) samples, preferring shorter
/// tweets, and every minority sample. Lengths are measured on the tweet
/// body when the text is composed.
pub fn balance_stage(train: &LabeledDataset, target: usize, seed: u64) -> Result<LabeledDataset> {
    let negatives: Vec<BinarySample> = train
        .samples()
        .iter()
        .filter(|s| s.labels.binary_label() == Some(false))
        .map(|s| {
            let body = split_composed(&s.text)
                .map(|segments| segments[0].clone())
                .unwrap_or_else(|_| s.text.clone());
            BinarySample {
                text: body,
                ..s.clone()
            }
        })
        .collect();
    let kept: HashSet<String> = undersample(&negatives, target, seed)?
        .into_iter()
        .map(|s| s.id)
        .collect();
    let out = train
        .samples()
        .iter()
        .filter(|s| s.labels.binary_label() != Some(false) || kept.contains(&s.id))
        .cloned()
        .collect();
    LabeledDataset::new(train.mode(), out)
}

/// Applies the full text pipeline to one raw tweet, yielding the composed
/// string a trained model expects.
pub fn prepare_text(raw: &str, res: &Resources) -> String {
    let (normalized, _) = normalize(raw, &res.prep);
    let bundle = extract(raw, &normalized, &res.vocabulary, &res.tagger);
    compose(&normalized, &bundle)
}

/// A row of the plain `{id, text}` input accepted by prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRow {
    pub id: String,
    pub text: String,
}

/// Reads `{id, text}` rows from JSONL or CSV; extra columns are ignored.
pub fn read_texts(path: &Path, format: Format) -> Result<Vec<TextRow>> {
    match format {
        Format::Jsonl => {
            let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut rows = Vec::new();
            for (i, line) in content.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let row: TextRow =
                    serde_json::from_str(line).map_err(|e| Error::MalformedRow {
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
                rows.push(row);
            }
            Ok(rows)
        }
        Format::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| Error::MalformedRow {
                line: 0,
                msg: e.to_string(),
            })?;
            let mut rows = Vec::new();
            for result in reader.deserialize::<TextRow>() {
                let row = result.map_err(|e| Error::MalformedRow {
                    line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                    msg: e.to_string(),
                })?;
                rows.push(row);
            }
            Ok(rows)
        }
    }
}

/// What `run_pipeline` writes to `report.json`: eval ids per task plus the
/// metrics. Free of paths and timestamps so identical runs serialize to
/// identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: PipelineMode,
    pub seed: u64,
    pub eval_ids: BTreeMap<String, Vec<String>>,
    pub metrics: MetricsReport,
}

fn run_stage<T>(dir: &Path, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| {
        let _ = fs::write(dir.join(format!("{name}.failed")), format!("{e}\n"));
        Error::stage(name, e)
    })
}

fn write_stage_file(ds: &LabeledDataset, dir: &Path, name: &str) -> Result<()> {
    write_labeled(ds, &dir.join(name), Format::Jsonl)
}

struct TaskOutcome {
    metrics: crate::metrics::EmotionMetrics,
    eval_ids: Vec<String>,
}

fn resolve_class_weights(
    section: Option<&BalanceSection>,
    count0: usize,
    count1: usize,
) -> Result<ClassWeights> {
    match section.and_then(|b| b.class_weights) {
        None => Ok(ClassWeights::default()),
        Some(ClassWeightsConfig::Named(NamedWeights::Derive)) => {
            derive_class_weights(count0, count1)
        }
        Some(ClassWeightsConfig::Explicit { w0, w1 }) => ClassWeights::new(w0, w1),
    }
}

fn label_counts(ds: &LabeledDataset) -> (usize, usize) {
    let positives = ds
        .samples()
        .iter()
        .filter(|s| s.labels.binary_label() == Some(true))
        .count();
    (ds.len() - positives, positives)
}

fn build_train_config(cfg: &ExperimentConfig, class_weights: ClassWeights) -> TrainConfig {
    TrainConfig {
        loss: cfg.train.loss,
        class_weights,
        lr: cfg.train.lr,
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        max_tokens: cfg.train.max_tokens,
        seed: cfg.seed,
        stats_per_batch: cfg.train.stats_per_batch,
    }
}

fn train_and_checkpoint(
    cfg: &ExperimentConfig,
    dir: &Path,
    ds: &LabeledDataset,
    class_weights: ClassWeights,
) -> Result<(LinearModel, HashedFeaturizer)> {
    let train_config = build_train_config(cfg, class_weights);
    let featurizer = HashedFeaturizer::new(cfg.train.dim, cfg.seed, cfg.train.max_tokens)?;
    let model = train(ds, &train_config, &featurizer)?;
    save_checkpoint(&dir.join("checkpoint.json"), &model, &featurizer, &train_config)?;
    Ok((model, featurizer))
}

/// Scores a trained model on a labeled dataset. Binary datasets need a
/// one-head model and yield a single-emotion report; multi-label datasets
/// need a six-head model and yield the full report with Hamming fields.
/// Also returns the evaluated sample ids in dataset order.
pub fn evaluate_dataset(
    model: &LinearModel,
    featurizer: &HashedFeaturizer,
    ds: &LabeledDataset,
) -> Result<(MetricsReport, Vec<String>)> {
    let expected_heads = match ds.mode() {
        LabelMode::Binary(_) => 1,
        LabelMode::Multi => Emotion::COUNT,
    };
    if model.heads() != expected_heads {
        return Err(Error::ShapeMismatch(format!(
            "model has {} heads but the dataset needs {expected_heads}",
            model.heads()
        )));
    }
    match ds.mode() {
        LabelMode::Binary(emotion) => {
            let mut preds = Vec::with_capacity(ds.len());
            let mut labels = Vec::with_capacity(ds.len());
            let mut ids = Vec::with_capacity(ds.len());
            for sample in ds.samples() {
                let prediction = predict(model, &sample.text, featurizer)?;
                preds.push(prediction.decisions[0]);
                labels.push(sample.labels.binary_label().expect("binary dataset"));
                ids.push(sample.id.clone());
            }
            let mut per_emotion = BTreeMap::new();
            per_emotion.insert(emotion.name().to_string(), emotion_metrics(&preds, &labels)?);
            Ok((
                MetricsReport {
                    per_emotion,
                    macro_f1: None,
                    hamming_loss: None,
                    hamming_score: None,
                },
                ids,
            ))
        }
        LabelMode::Multi => {
            let mut truth_rows = Vec::with_capacity(ds.len());
            let mut pred_rows = Vec::with_capacity(ds.len());
            let mut ids = Vec::with_capacity(ds.len());
            for sample in ds.samples() {
                let prediction = predict(model, &sample.text, featurizer)?;
                let truth = match &sample.labels {
                    Labels::Multi(set) => set.as_array().to_vec(),
                    Labels::Binary { .. } => unreachable!("multilabel dataset"),
                };
                truth_rows.push(truth);
                pred_rows.push(prediction.decisions);
                ids.push(sample.id.clone());
            }
            let mut per_emotion = BTreeMap::new();
            let mut f1s = Vec::with_capacity(Emotion::COUNT);
            for emotion in Emotion::ALL {
                let i = emotion.index();
                let preds: Vec<bool> = pred_rows.iter().map(|row| row[i]).collect();
                let labels: Vec<bool> = truth_rows.iter().map(|row| row[i]).collect();
                let metrics = emotion_metrics(&preds, &labels)?;
                f1s.push(metrics.f1);
                per_emotion.insert(emotion.name().to_string(), metrics);
            }
            Ok((
                MetricsReport {
                    per_emotion,
                    macro_f1: Some(macro_f1(&f1s)?),
                    hamming_loss: Some(hamming_loss(&truth_rows, &pred_rows)?),
                    hamming_score: Some(hamming_score(&truth_rows, &pred_rows)?),
                },
                ids,
            ))
        }
    }
}

fn run_binary_task(
    cfg: &ExperimentConfig,
    dir: &Path,
    res: &Resources,
    corpus: &VotedDataset,
    emotion: Emotion,
) -> Result<TaskOutcome> {
    let selected = run_stage(dir, "select", || {
        let ds = select_binary(corpus, cfg.selection.policy(), emotion)?;
        write_stage_file(&ds, dir, "01_selected.jsonl")?;
        Ok(ds)
    })?;
    let preprocessed = run_stage(dir, "preprocess", || {
        let ds = preprocess_stage(&selected, &res.prep)?;
        write_stage_file(&ds, dir, "02_preprocessed.jsonl")?;
        Ok(ds)
    })?;
    let featurized = run_stage(dir, "featurize", || {
        let ds = featurize_stage(&selected, &preprocessed, res)?;
        write_stage_file(&ds, dir, "03_featurized.jsonl")?;
        Ok(ds)
    })?;
    let (train_ds, eval_ds) = run_stage(dir, "split", || {
        let (train_ds, eval_ds) = featurized.split(cfg.split.eval_fraction, cfg.seed)?;
        write_stage_file(&train_ds, dir, "04_train.jsonl")?;
        write_stage_file(&eval_ds, dir, "04_eval.jsonl")?;
        Ok((train_ds, eval_ds))
    })?;
    let (original_neg, original_pos) = label_counts(&train_ds);

    let augmented = match cfg.augment_for(emotion) {
        Some(aug_cfg) => run_stage(dir, "augment", || {
            let ds = augment_stage(&train_ds, &aug_cfg, res, cfg.seed)?;
            write_stage_file(&ds, dir, "05_augmented.jsonl")?;
            Ok(ds)
        })?,
        None => train_ds,
    };
    let (balanced, class_weights) = match &cfg.balance {
        Some(section) => run_stage(dir, "balance", || {
            let weights = resolve_class_weights(Some(section), original_neg, original_pos)?;
            let ds = match cfg.undersample_target(emotion) {
                Some(target) => {
                    let ds = balance_stage(&augmented, target, cfg.seed)?;
                    write_stage_file(&ds, dir, "06_balanced.jsonl")?;
                    ds
                }
                None => augmented.clone(),
            };
            Ok((ds, weights))
        })?,
        None => (augmented, ClassWeights::default()),
    };

    let (model, featurizer) = run_stage(dir, "train", || {
        train_and_checkpoint(cfg, dir, &balanced, class_weights)
    })?;

    run_stage(dir, "eval", || {
        let (report, eval_ids) = evaluate_dataset(&model, &featurizer, &eval_ds)?;
        let metrics = report
            .per_emotion
            .into_values()
            .next()
            .expect("binary report has one emotion");
        Ok(TaskOutcome { metrics, eval_ids })
    })
}

fn run_multilabel(
    cfg: &ExperimentConfig,
    dir: &Path,
    res: &Resources,
    corpus: &VotedDataset,
) -> Result<(MetricsReport, Vec<String>)> {
    let selected = run_stage(dir, "select", || {
        let ds = select_multi(corpus, cfg.selection.policy())?;
        write_stage_file(&ds, dir, "01_selected.jsonl")?;
        Ok(ds)
    })?;
    let preprocessed = run_stage(dir, "preprocess", || {
        let ds = preprocess_stage(&selected, &res.prep)?;
        write_stage_file(&ds, dir, "02_preprocessed.jsonl")?;
        Ok(ds)
    })?;
    let featurized = run_stage(dir, "featurize", || {
        let ds = featurize_stage(&selected, &preprocessed, res)?;
        write_stage_file(&ds, dir, "03_featurized.jsonl")?;
        Ok(ds)
    })?;
    let (train_ds, eval_ds) = run_stage(dir, "split", || {
        let (train_ds, eval_ds) = featurized.split(cfg.split.eval_fraction, cfg.seed)?;
        write_stage_file(&train_ds, dir, "04_train.jsonl")?;
        write_stage_file(&eval_ds, dir, "04_eval.jsonl")?;
        Ok((train_ds, eval_ds))
    })?;

    let class_weights = resolve_class_weights(cfg.balance.as_ref(), 0, 0)?;
    let (model, featurizer) = run_stage(dir, "train", || {
        train_and_checkpoint(cfg, dir, &train_ds, class_weights)
    })?;

    run_stage(dir, "eval", || evaluate_dataset(&model, &featurizer, &eval_ds))
}

/// Runs the whole experiment: select, preprocess, featurize, split, augment
/// and balance on the train side only, train, and eval. Writes stage files,
/// a checkpoint, a config echo, and `report.json` under the output
/// directory, then returns the report. Deterministic given the seed.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let echo = toml::to_string_pretty(cfg)
        .map_err(|e| Error::InvalidConfig(format!("config echo failed: {e}")))?;
    fs::write(out.join("config.toml"), echo).map_err(|e| Error::io(out, e))?;

    let (res, corpus) = run_stage(out, "ingest", || {
        let res = Resources::load(&cfg.paths.resources)?;
        let corpus = load_voted(&cfg.paths.corpus, cfg.corpus_format())?;
        Ok((res, corpus))
    })?;

    let report = match cfg.mode {
        PipelineMode::BinaryPerEmotion => {
            let mut per_emotion = BTreeMap::new();
            let mut eval_ids = BTreeMap::new();
            let mut f1s = Vec::with_capacity(Emotion::COUNT);
            for emotion in Emotion::ALL {
                let dir = out.join(emotion.name());
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let outcome = run_binary_task(cfg, &dir, &res, &corpus, emotion)?;
                f1s.push(outcome.metrics.f1);
                per_emotion.insert(emotion.name().to_string(), outcome.metrics);
                eval_ids.insert(emotion.name().to_string(), outcome.eval_ids);
            }
            ExperimentReport {
                mode: cfg.mode,
                seed: cfg.seed,
                eval_ids,
                metrics: MetricsReport {
                    per_emotion,
                    macro_f1: Some(macro_f1(&f1s)?),
                    hamming_loss: None,
                    hamming_score: None,
                },
            }
        }
        PipelineMode::Multilabel => {
            let (metrics, ids) = run_multilabel(cfg, out, &res, &corpus)?;
            let mut eval_ids = BTreeMap::new();
            eval_ids.insert("all".to_string(), ids);
            ExperimentReport {
                mode: cfg.mode,
                seed: cfg.seed,
                eval_ids,
                metrics,
            }
        }
    };

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidConfig(format!("report serialization failed: {e}")))?;
    fs::write(out.join("report.json"), json + "\n").map_err(|e| Error::io(out, e))?;
    Ok(report)
}
