//! End-to-end pipeline for imbalanced multi-label emotion classification of
//! Persian social-media text.
//!
//! The pieces, in pipeline order:
//!
//! - [`corpus`]: voted / binary-labeled datasets, JSONL & CSV I/O, splitting
//! - [`selection`]: vote-count → label policies (threshold, confidence)
//! - [`textprep`]: tweet normalization (spacing, transliteration, stretch
//!   collapse, diacritics, hashtags, residual character removal)
//! - [`features`]: emoji / hashtag / misspelling / POS extraction and
//!   `</s></s>` composition
//! - [`augment`]: mutation-based augmentation (swap, replace, insert, delete)
//! - [`balance`]: 1/length-weighted undersampling and class-weight derivation
//! - [`model`]: hashed bag-of-words linear classifier with weighted, F1- and
//!   Recall-scaled cross-entropy losses
//! - [`metrics`]: binary metrics, macro-F1, Hamming loss/score
//! - [`pipeline`]: experiment orchestration, deterministic end to end
//! - [`synth`]: seeded synthetic voted corpora for tests and benchmarks
//!
//! Every randomized operation takes an explicit seed; identical inputs and
//! seeds give bit-identical outputs.

pub mod augment;
pub mod balance;
pub mod corpus;
pub mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod selection;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
