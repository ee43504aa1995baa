//! Versioned JSON model checkpoints. Weights are stored sparsely (only
//! buckets the training data touched), so files stay small even for large
//! featurizer dimensions, and f64 values round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HashedFeaturizer, LinearModel, TrainConfig};
use crate::error::{Error, Result};

const FORMAT: &str = "emopipe-model";
const VERSION: u32 = 1;

/// On-disk layout of a trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub featurizer: HashedFeaturizer,
    pub train_config: TrainConfig,
    pub bias: Vec<f64>,
    /// Nonzero weight entries per head as (bucket, value) pairs.
    pub weights: Vec<Vec<(u32, f64)>>,
}

/// Writes the model with the featurizer and config that produced it.
pub fn save_checkpoint(
    path: &Path,
    model: &LinearModel,
    featurizer: &HashedFeaturizer,
    cfg: &TrainConfig,
) -> Result<()> {
    if featurizer.dim() != model.dim() {
        return Err(Error::DimMismatch {
            model: model.dim(),
            featurizer: featurizer.dim(),
        });
    }
    let checkpoint = Checkpoint {
        format: FORMAT.to_string(),
        version: VERSION,
        featurizer: *featurizer,
        train_config: *cfg,
        bias: model.bias.clone(),
        weights: model
            .weights
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(_, w)| *w != 0.0)
                    .map(|(i, w)| (i as u32, *w))
                    .collect()
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&checkpoint)
        .map_err(|e| Error::Checkpoint(format!("serialize failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a checkpoint back into a usable model.
pub fn load_checkpoint(path: &Path) -> Result<(LinearModel, HashedFeaturizer, TrainConfig)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let checkpoint: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("parse failed: {e}")))?;
    if checkpoint.format != FORMAT {
        return Err(Error::Checkpoint(format!(
            "unrecognized format {:?}",
            checkpoint.format
        )));
    }
    if checkpoint.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {} (expected {VERSION})",
            checkpoint.version
        )));
    }
    // Re-validate the featurizer parameters; the file may be hand-edited.
    let featurizer = HashedFeaturizer::new(
        checkpoint.featurizer.dim(),
        checkpoint.featurizer.seed(),
        checkpoint.featurizer.max_tokens(),
    )
    .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let dim = featurizer.dim();
    let mut dense = Vec::with_capacity(checkpoint.weights.len());
    for row in &checkpoint.weights {
        let mut out = vec![0.0; dim];
        for &(index, value) in row {
            let index = index as usize;
            if index >= dim {
                return Err(Error::Checkpoint(format!(
                    "weight bucket {index} outside dim {dim}"
                )));
            }
            out[index] = value;
        }
        dense.push(out);
    }
    let model = LinearModel::from_parts(dim, dense, checkpoint.bias)?;
    Ok((model, featurizer, checkpoint.train_config))
}
