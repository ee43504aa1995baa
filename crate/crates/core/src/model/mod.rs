//! Desk-scale classifier: hashed bag-of-words features feeding a linear
//! model with per-head sigmoid outputs, trained by seeded mini-batch
//! gradient descent under one of the three losses.

mod checkpoint;
mod losses;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use losses::{f1_ce, recall_ce, weighted_ce, ClassStats, PROB_EPS};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balance::ClassWeights;
use crate::corpus::{Emotion, LabeledDataset, LabelMode, Labels};
use crate::error::{Error, Result};
use crate::features::SEP;

/// Deterministic token-to-bucket featurizer. Tokens are whitespace-split,
/// truncated to `max_tokens`, and counted into `dim` buckets; each
/// `</s></s>` switches to the next segment, which salts the hash so equal
/// tokens in different segments land in different buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedFeaturizer {
    dim: usize,
    seed: u64,
    max_tokens: usize,
}

pub const DEFAULT_DIM: usize = 1 << 18;
pub const MIN_DIM: usize = 1 << 10;
pub const DEFAULT_MAX_TOKENS: usize = 256;

impl HashedFeaturizer {
    pub fn new(dim: usize, seed: u64, max_tokens: usize) -> Result<Self> {
        if !dim.is_power_of_two() || dim < MIN_DIM {
            return Err(Error::InvalidConfig(format!(
                "featurizer dim must be a power of two >= {MIN_DIM}, got {dim}"
            )));
        }
        if max_tokens == 0 {
            return Err(Error::InvalidConfig(
                "featurizer max_tokens must be >= 1".to_string(),
            ));
        }
        Ok(Self { dim, seed, max_tokens })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    /// Bag of hashed token counts. Empty input gives the zero vector.
    pub fn featurize(&self, text: &str) -> SparseVec {
        let mut counts: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
        let mut segment = 0usize;
        for token in text.split_whitespace().take(self.max_tokens) {
            if token == SEP {
                segment += 1;
                continue;
            }
            let bucket = self.bucket(token, segment);
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
        SparseVec {
            entries: counts.into_iter().collect(),
        }
    }

    /// FNV-1a over the seed bytes, the segment index, then the token bytes.
    fn bucket(&self, token: &str, segment: usize) -> u32 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for b in self.seed.to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(PRIME);
        }
        h = (h ^ segment as u64).wrapping_mul(PRIME);
        for b in token.as_bytes() {
            h = (h ^ u64::from(*b)).wrapping_mul(PRIME);
        }
        (h & (self.dim as u64 - 1)) as u32
    }
}

/// Sparse nonnegative feature vector, entries sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, c)| c * weights[i as usize])
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Which loss drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    WeightedCe,
    F1Ce,
    RecallCe,
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub class_weights: ClassWeights,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_tokens: usize,
    pub seed: u64,
    /// Refresh the refocusing statistics from the running epoch counts
    /// after every batch instead of once per epoch.
    pub stats_per_batch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::WeightedCe,
            class_weights: ClassWeights::default(),
            lr: 0.1,
            epochs: 5,
            batch_size: 16,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: 0,
            stats_per_batch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".to_string()));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidConfig("max_tokens must be >= 1".to_string()));
        }
        self.class_weights.validate()
    }
}

/// Linear classifier with one sigmoid head (binary) or six (multi-label).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    dim: usize,
    /// One weight vector of length `dim` per head.
    pub weights: Vec<Vec<f64>>,
    /// One bias per head.
    pub bias: Vec<f64>,
}

/// Per-head probability and thresholded decision for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub decisions: Vec<bool>,
}

/// Per-epoch traces that tests and reports can inspect.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean total loss (summed over heads) per epoch.
    pub epoch_losses: Vec<f64>,
    /// Final per-head statistics from the last epoch's predictions.
    pub final_stats: Vec<ClassStats>,
}

impl LinearModel {
    fn zeroed(dim: usize, heads: usize) -> Self {
        LinearModel {
            dim,
            weights: vec![vec![0.0; dim]; heads],
            bias: vec![0.0; heads],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn heads(&self) -> usize {
        self.bias.len()
    }

    pub(crate) fn from_parts(dim: usize, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != bias.len() || !matches!(bias.len(), 1 | 6) {
            return Err(Error::Checkpoint(format!(
                "bad head count: {} weight rows, {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().any(|w| w.len() != dim) {
            return Err(Error::Checkpoint("weight row length differs from dim".to_string()));
        }
        let finite = bias.iter().chain(weights.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Checkpoint("non-finite parameter".to_string()));
        }
        Ok(LinearModel { dim, weights, bias })
    }

    fn prob(&self, head: usize, x: &SparseVec) -> f64 {
        sigmoid(x.dot(&self.weights[head]) + self.bias[head])
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Per-head 0/1 labels for one sample.
fn head_labels(labels: &Labels, heads: usize) -> Vec<bool> {
    match labels {
        Labels::Binary { label, .. } => vec![*label],
        Labels::Multi(set) => (0..heads).map(|h| set.get(Emotion::ALL[h])).collect(),
    }
}

/// Confusion counts for one head over one epoch of training predictions.
#[derive(Debug, Clone, Copy, Default)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
    tn: usize,
}

impl Confusion {
    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// F1 and recall per class, class 0 first. 0/0 ratios collapse to 0.
    fn stats(&self) -> ClassStats {
        let score = |tp: usize, fp: usize, fn_: usize| {
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            (f1, recall)
        };
        let (f1_pos, recall_pos) = score(self.tp, self.fp, self.fn_);
        let (f1_neg, recall_neg) = score(self.tn, self.fn_, self.fp);
        ClassStats {
            f1: [f1_neg, f1_pos],
            recall: [recall_neg, recall_pos],
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Trains a linear model with seeded mini-batch gradient descent. The
/// refocusing losses read per-class statistics gathered from the previous
/// epoch's own training predictions; epoch 1 starts from zero statistics.
/// Multi-label training runs six independent heads whose losses add up.
pub fn train(ds: &LabeledDataset, cfg: &TrainConfig, f: &HashedFeaturizer) -> Result<LinearModel> {
    train_traced(ds, cfg, f).map(|(model, _)| model)
}

/// [`train`] plus the per-epoch loss trace.
pub fn train_traced(
    ds: &LabeledDataset,
    cfg: &TrainConfig,
    f: &HashedFeaturizer,
) -> Result<(LinearModel, TrainTrace)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::TooFewSamples { n: 0 });
    }
    let heads = match ds.mode() {
        LabelMode::Binary(_) => 1,
        LabelMode::Multi => 6,
    };
    let features: Vec<SparseVec> = ds.samples().iter().map(|s| f.featurize(&s.text)).collect();
    let labels: Vec<Vec<bool>> = ds
        .samples()
        .iter()
        .map(|s| head_labels(&s.labels, heads))
        .collect();

    let mut model = LinearModel::zeroed(f.dim(), heads);
    let mut stats = vec![ClassStats::default(); heads];
    let mut trace = TrainTrace::default();
    let mut order: Vec<usize> = (0..ds.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);

        let mut confusion = vec![Confusion::default(); heads];
        let mut loss_sum = 0.0;
        let mut batches = 0usize;

        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut total_loss = 0.0;
            for head in 0..heads {
                let probs: Vec<f64> = batch
                    .iter()
                    .map(|&i| model.prob(head, &features[i]))
                    .collect();
                let truth: Vec<bool> = batch.iter().map(|&i| labels[i][head]).collect();
                for (&p, &y) in probs.iter().zip(&truth) {
                    confusion[head].add(p >= 0.5, y);
                }
                let result = match cfg.loss {
                    LossKind::WeightedCe => weighted_ce(&probs, &truth, &cfg.class_weights),
                    LossKind::F1Ce => f1_ce(&probs, &truth, &cfg.class_weights, &stats[head]),
                    LossKind::RecallCe => {
                        recall_ce(&probs, &truth, &cfg.class_weights, &stats[head])
                    }
                };
                let (loss, grad) = match result {
                    Ok(v) => v,
                    // Non-finite probabilities mean the parameters blew up.
                    Err(Error::NonFinite(_)) => {
                        return Err(Error::Diverged {
                            epoch: epoch + 1,
                            batch: batch_index + 1,
                        })
                    }
                    Err(e) => return Err(e),
                };
                total_loss += loss;
                for (&i, &g) in batch.iter().zip(&grad) {
                    let step = cfg.lr * g;
                    for &(col, count) in &features[i].entries {
                        model.weights[head][col as usize] -= step * count;
                    }
                    model.bias[head] -= step;
                }
            }
            if !total_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: epoch + 1,
                    batch: batch_index + 1,
                });
            }
            loss_sum += total_loss;
            batches += 1;
            if cfg.stats_per_batch {
                for head in 0..heads {
                    stats[head] = confusion[head].stats();
                }
            }
        }

        for head in 0..heads {
            stats[head] = confusion[head].stats();
        }
        trace.epoch_losses.push(loss_sum / batches as f64);
    }
    trace.final_stats = stats;
    Ok((model, trace))
}

/// Sigmoid probability and 0.5-threshold decision per head.
pub fn predict(model: &LinearModel, text: &str, f: &HashedFeaturizer) -> Result<Prediction> {
    if f.dim() != model.dim {
        return Err(Error::DimMismatch {
            model: model.dim,
            featurizer: f.dim(),
        });
    }
    let x = f.featurize(text);
    let probs: Vec<f64> = (0..model.heads()).map(|h| model.prob(h, &x)).collect();
    let decisions = probs.iter().map(|&p| p >= 0.5).collect();
    Ok(Prediction { probs, decisions })
}
