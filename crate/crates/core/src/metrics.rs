//! Evaluation metrics: positive-class accuracy/precision/recall/F1 per
//! emotion, macro-F1 across emotions, and the two multi-label Hamming
//! measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive-class metrics for one binary task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy plus positive-class precision/recall/F1 with the 0/0 := 0
/// convention.
pub fn binary_metrics(preds: &[bool], labels: &[bool]) -> Result<BinaryMetrics> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::TooFewSamples { n: 0 });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut tn = 0usize;
    for (&p, &y) in preds.iter().zip(labels) {
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BinaryMetrics {
        accuracy: ratio(tp + tn, preds.len()),
        precision,
        recall,
        f1,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_shape(truth: &[Vec<bool>], preds: &[Vec<bool>]) -> Result<usize> {
    if truth.len() != preds.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} truth rows vs {} prediction rows",
            truth.len(),
            preds.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::ShapeMismatch("empty label matrix".to_string()));
    }
    let width = truth[0].len();
    if width == 0 {
        return Err(Error::ShapeMismatch("zero-width label matrix".to_string()));
    }
    for (i, (t, p)) in truth.iter().zip(preds).enumerate() {
        if t.len() != width || p.len() != width {
            return Err(Error::ShapeMismatch(format!(
                "row {i}: expected width {width}, got {} and {}",
                t.len(),
                p.len()
            )));
        }
    }
    Ok(width)
}

/// Fraction of label cells where prediction and truth disagree.
pub fn hamming_loss(truth: &[Vec<bool>], preds: &[Vec<bool>]) -> Result<f64> {
    let width = check_shape(truth, preds)?;
    let mut disagreements = 0usize;
    for (t, p) in truth.iter().zip(preds) {
        disagreements += t.iter().zip(p).filter(|(a, b)| a != b).count();
    }
    Ok(disagreements as f64 / (truth.len() * width) as f64)
}

/// Mean per-sample Jaccard similarity of the positive label sets; a row
/// with no positives on either side scores 1.
pub fn hamming_score(truth: &[Vec<bool>], preds: &[Vec<bool>]) -> Result<f64> {
    check_shape(truth, preds)?;
    let mut total = 0.0;
    for (t, p) in truth.iter().zip(preds) {
        let intersection = t.iter().zip(p).filter(|(a, b)| **a && **b).count();
        let union = t.iter().zip(p).filter(|(a, b)| **a || **b).count();
        total += if union == 0 {
            1.0
        } else {
            intersection as f64 / union as f64
        };
    }
    Ok(total / truth.len() as f64)
}

/// Unweighted mean of exactly six per-emotion F1 scores.
pub fn macro_f1(per_emotion_f1: &[f64]) -> Result<f64> {
    if per_emotion_f1.len() != 6 {
        return Err(Error::WrongArity(per_emotion_f1.len()));
    }
    for &v in per_emotion_f1 {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConfig(format!(
                "F1 values must be in [0, 1], got {v}"
            )));
        }
    }
    Ok(per_emotion_f1.iter().sum::<f64>() / 6.0)
}

/// Everything reported for one emotion. `macro_binary_f1` averages the
/// positive-class F1 with the F1 of the flipped problem, for readers who
/// want the two-class macro view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub macro_binary_f1: f64,
    pub support_pos: usize,
    pub support_neg: usize,
}

/// Per-emotion metrics for one task.
pub fn emotion_metrics(preds: &[bool], labels: &[bool]) -> Result<EmotionMetrics> {
    let positive = binary_metrics(preds, labels)?;
    let flipped_preds: Vec<bool> = preds.iter().map(|p| !p).collect();
    let flipped_labels: Vec<bool> = labels.iter().map(|y| !y).collect();
    let negative = binary_metrics(&flipped_preds, &flipped_labels)?;
    let support_pos = labels.iter().filter(|&&y| y).count();
    Ok(EmotionMetrics {
        accuracy: positive.accuracy,
        precision: positive.precision,
        recall: positive.recall,
        f1: positive.f1,
        macro_binary_f1: (positive.f1 + negative.f1) / 2.0,
        support_pos,
        support_neg: labels.len() - support_pos,
    })
}

/// Full evaluation report. The emotion keys are the canonical lowercase
/// names; `macro_f1` is present only when all six emotions were evaluated,
/// and the Hamming fields only for multi-label evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_emotion: BTreeMap<String, EmotionMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamming_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamming_score: Option<f64>,
}
