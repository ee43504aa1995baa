//! Command-line driver: one subcommand per pipeline stage, plus a one-shot
//! experiment runner (`pipeline`) and a synthetic-corpus generator (`synth`).
//!
//! Exit codes: 0 on success, 1 when the input or configuration is invalid,
//! 2 when a runtime failure (io, divergence, bad checkpoint) occurs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emopipe::augment::default_config;
use emopipe::balance::{derive_class_weights, ClassWeights};
use emopipe::corpus::{
    load_labeled, load_voted, write_labeled, write_voted, Emotion, Format, LabeledDataset,
    LabelMode, Origin,
};
use emopipe::model::{
    load_checkpoint, predict, save_checkpoint, train_traced, HashedFeaturizer, LossKind,
    TrainConfig, DEFAULT_DIM,
};
use emopipe::pipeline::{
    augment_stage, balance_stage, evaluate_dataset, featurize_stage, prepare_text,
    preprocess_stage, read_texts, run_pipeline, select_binary, select_multi, ExperimentConfig,
    ResourcePaths, Resources,
};
use emopipe::selection::SelectionPolicy;
use emopipe::synth::{generate, SynthSpec};
use emopipe::{Error, Result};

#[derive(Parser)]
#[command(name = "emopipe", version, about = "Emotion-classification pipeline for Persian tweets")]
struct Cli {
    /// Seed for the randomized stages (augment, balance, train, split).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// TOML config file; required by `pipeline` and `synth`.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Dataset file format for reads and writes.
    #[arg(long, global = true, default_value = "jsonl", value_name = "jsonl|csv")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a voted corpus and rewrite it as canonical JSONL.
    Ingest {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },

    /// Turn annotator votes into labels.
    Select {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Labeling policy.
        #[arg(long, value_name = "threshold|confidence")]
        policy: String,
        /// Vote threshold for the threshold policy.
        #[arg(long, value_name = "N")]
        t: Option<u8>,
        /// Target emotion; required by the confidence policy. With the
        /// threshold policy it projects the labels onto one emotion;
        /// without it the output is multilabel.
        #[arg(long, value_name = "NAME")]
        emotion: Option<String>,
    },

    /// Normalize tweet text; drops samples that normalize to nothing.
    Preprocess {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// English-to-Persian dictionary TSV (overridden together with --translit).
        #[arg(long, value_name = "FILE", requires = "translit")]
        dict: Option<PathBuf>,
        /// Romanized-Persian transliteration TSV.
        #[arg(long, value_name = "FILE", requires = "dict")]
        translit: Option<PathBuf>,
    },

    /// Attach emoji, hashtag, misspelling, and POS segments to each text.
    Featurize {
        /// The selection output the preprocessed dataset came from.
        #[arg(long, value_name = "FILE")]
        raw: PathBuf,
        /// The preprocessed (normalized) dataset.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        #[command(flatten)]
        resources: FeatureResourceArgs,
    },

    /// Expand the minority class with mutated copies of its samples.
    Augment {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Emotion whose tuned default intensities to start from.
        #[arg(long, value_name = "NAME")]
        emotion: String,
        /// Copies generated per minority sample.
        #[arg(long, value_name = "N")]
        n_aug: Option<usize>,
        /// Per-sentence probability of one adjacent-pair swap.
        #[arg(long, value_name = "P")]
        swap_p: Option<f64>,
        /// Per-sentence probability of one synonym replacement.
        #[arg(long, value_name = "P")]
        replace_p: Option<f64>,
        /// Per-sentence probability of one word insertion.
        #[arg(long, value_name = "P")]
        insert_p: Option<f64>,
        /// Per-word probability of deletion.
        #[arg(long, value_name = "P")]
        delete_p: Option<f64>,
        /// Synonym lexicon TSV override.
        #[arg(long, value_name = "FILE")]
        synonyms: Option<PathBuf>,
        #[command(flatten)]
        resources: FeatureResourceArgs,
    },

    /// Undersample the majority class, preferring shorter tweets, and emit
    /// class weights for the experiment config.
    Balance {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Majority-class samples to keep.
        #[arg(long, value_name = "N")]
        target: usize,
        /// Majority-class weight; derived from the input counts if absent.
        #[arg(long, value_name = "X", requires = "w1")]
        w0: Option<f64>,
        /// Minority-class weight.
        #[arg(long, value_name = "X", requires = "w0")]
        w1: Option<f64>,
    },

    /// Train a linear classifier on a labeled dataset.
    Train {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Checkpoint file to write.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, default_value = "weighted_ce", value_name = "weighted_ce|f1_ce|recall_ce")]
        loss: String,
        #[arg(long, default_value_t = TrainConfig::default().lr)]
        lr: f64,
        #[arg(long, default_value_t = TrainConfig::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = TrainConfig::default().batch_size)]
        batch_size: usize,
        /// Token cap per sample.
        #[arg(long, default_value_t = TrainConfig::default().max_tokens)]
        max_tokens: usize,
        /// Feature-hashing dimension (a power of two).
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
        /// Majority-class weight.
        #[arg(long, value_name = "X", requires = "w1", conflicts_with = "derive_weights")]
        w0: Option<f64>,
        /// Minority-class weight.
        #[arg(long, value_name = "X", requires = "w0", conflicts_with = "derive_weights")]
        w1: Option<f64>,
        /// Derive class weights from the input's label counts.
        #[arg(long)]
        derive_weights: bool,
        /// Refresh the refocusing statistics within each epoch.
        #[arg(long)]
        stats_per_batch: bool,
    },

    /// Classify raw texts with a trained checkpoint.
    Predict {
        /// Checkpoint file from `train`.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Rows of {id, text}; extra columns are ignored.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Where to write the JSONL predictions; stdout if absent.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Emotion a one-head checkpoint scores; checkpoints do not record it.
        #[arg(long, value_name = "NAME")]
        emotion: Option<String>,
        /// English-to-Persian dictionary TSV (overridden together with --translit).
        #[arg(long, value_name = "FILE", requires = "translit")]
        dict: Option<PathBuf>,
        /// Romanized-Persian transliteration TSV.
        #[arg(long, value_name = "FILE", requires = "dict")]
        translit: Option<PathBuf>,
        #[command(flatten)]
        resources: FeatureResourceArgs,
    },

    /// Score a checkpoint against a labeled dataset.
    Eval {
        /// Checkpoint file from `train`.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Labeled dataset with composed text, e.g. a split output.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Where to write the JSON metrics report; stdout if absent.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },

    /// Run the full experiment described by --config.
    Pipeline,

    /// Generate a synthetic voted corpus from the generator settings in --config.
    Synth {
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
}

/// Overrides for the bundled feature-extraction tables.
#[derive(Args)]
struct FeatureResourceArgs {
    /// Known-word vocabulary override (one word per line).
    #[arg(long, value_name = "FILE")]
    vocabulary: Option<PathBuf>,
    /// POS lexicon TSV (overridden together with --pos-suffix).
    #[arg(long, value_name = "FILE", requires = "pos_suffix")]
    pos_lexicon: Option<PathBuf>,
    /// POS suffix-rule TSV.
    #[arg(long, value_name = "FILE", requires = "pos_lexicon")]
    pos_suffix: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let format: Format = cli.format.parse()?;
    let seed = cli.seed;
    match cli.command {
        Command::Ingest { input, output } => {
            let ds = load_voted(&input, format)?;
            write_voted(&ds, &output, Format::Jsonl)?;
            println!("wrote {} samples to {}", ds.len(), output.display());
        }
        Command::Select {
            input,
            output,
            policy,
            t,
            emotion,
        } => {
            let ds = load_voted(&input, format)?;
            let policy = parse_policy(&policy, t)?;
            let emotion = emotion.as_deref().map(str::parse::<Emotion>).transpose()?;
            let labeled = match (policy, emotion) {
                (_, Some(emotion)) => select_binary(&ds, policy, emotion)?,
                (SelectionPolicy::Threshold { .. }, None) => select_multi(&ds, policy)?,
                (SelectionPolicy::Confidence, None) => {
                    return Err(Error::InvalidConfig(
                        "the confidence policy needs --emotion".to_string(),
                    ));
                }
            };
            write_labeled(&labeled, &output, format)?;
            println!("wrote {} samples to {}", labeled.len(), output.display());
        }
        Command::Preprocess {
            input,
            output,
            dict,
            translit,
        } => {
            let res = Resources::load(&ResourcePaths {
                en_fa_dict: dict,
                translit,
                ..ResourcePaths::default()
            })?;
            let ds = load_labeled(&input, format)?;
            let cleaned = preprocess_stage(&ds, &res.prep)?;
            write_labeled(&cleaned, &output, format)?;
            println!(
                "wrote {} samples to {} ({} dropped as empty)",
                cleaned.len(),
                output.display(),
                ds.len() - cleaned.len()
            );
        }
        Command::Featurize {
            raw,
            input,
            output,
            resources,
        } => {
            let res = Resources::load(&resources.paths())?;
            let raw_ds = load_labeled(&raw, format)?;
            let normalized = load_labeled(&input, format)?;
            let composed = featurize_stage(&raw_ds, &normalized, &res)?;
            write_labeled(&composed, &output, format)?;
            println!("wrote {} samples to {}", composed.len(), output.display());
        }
        Command::Augment {
            input,
            output,
            emotion,
            n_aug,
            swap_p,
            replace_p,
            insert_p,
            delete_p,
            synonyms,
            resources,
        } => {
            let mut paths = resources.paths();
            paths.synonyms = synonyms;
            let res = Resources::load(&paths)?;
            let mut cfg = default_config(emotion.parse()?);
            if let Some(n) = n_aug {
                cfg.n_aug = n;
            }
            if let Some(p) = swap_p {
                cfg.swap_p = p;
            }
            if let Some(p) = replace_p {
                cfg.replace_p = p;
            }
            if let Some(p) = insert_p {
                cfg.insert_p = p;
            }
            if let Some(p) = delete_p {
                cfg.delete_p = p;
            }
            cfg.validate()?;
            let ds = load_labeled(&input, format)?;
            let expanded = augment_stage(&ds, &cfg, &res, seed)?;
            write_labeled(&expanded, &output, format)?;
            let added = expanded
                .samples()
                .iter()
                .filter(|s| matches!(s.origin, Origin::Augmented { .. }))
                .count();
            println!(
                "wrote {} samples to {} ({added} augmented)",
                expanded.len(),
                output.display()
            );
        }
        Command::Balance {
            input,
            output,
            target,
            w0,
            w1,
        } => {
            let ds = load_labeled(&input, format)?;
            let (count0, count1) = binary_counts(&ds)?;
            let weights = match (w0, w1) {
                (Some(w0), Some(w1)) => ClassWeights::new(w0, w1)?,
                _ => derive_class_weights(count0, count1)?,
            };
            let balanced = balance_stage(&ds, target, seed)?;
            write_labeled(&balanced, &output, format)?;
            println!("wrote {} samples to {}", balanced.len(), output.display());
            println!(
                "class_weights = {{ w0 = {:?}, w1 = {:?} }}",
                weights.w0, weights.w1
            );
        }
        Command::Train {
            input,
            model,
            loss,
            lr,
            epochs,
            batch_size,
            max_tokens,
            dim,
            w0,
            w1,
            derive_weights,
            stats_per_batch,
        } => {
            let ds = load_labeled(&input, format)?;
            let class_weights = match (w0, w1) {
                (Some(w0), Some(w1)) => ClassWeights::new(w0, w1)?,
                _ if derive_weights => {
                    let (count0, count1) = binary_counts(&ds)?;
                    derive_class_weights(count0, count1)?
                }
                _ => ClassWeights::default(),
            };
            let cfg = TrainConfig {
                loss: parse_loss(&loss)?,
                class_weights,
                lr,
                epochs,
                batch_size,
                max_tokens,
                seed,
                stats_per_batch,
            };
            let featurizer = HashedFeaturizer::new(dim, seed, max_tokens)?;
            let (trained, trace) = train_traced(&ds, &cfg, &featurizer)?;
            for (i, loss) in trace.epoch_losses.iter().enumerate() {
                println!("epoch {}/{}: loss {loss:.6}", i + 1, cfg.epochs);
            }
            save_checkpoint(&model, &trained, &featurizer, &cfg)?;
            println!("wrote checkpoint to {}", model.display());
        }
        Command::Predict {
            model,
            input,
            output,
            emotion,
            dict,
            translit,
            resources,
        } => {
            let mut paths = resources.paths();
            paths.en_fa_dict = dict;
            paths.translit = translit;
            let res = Resources::load(&paths)?;
            let (trained, featurizer, _) = load_checkpoint(&model)?;
            let heads = head_names(&trained, emotion.as_deref())?;
            let rows = read_texts(&input, format)?;
            let mut lines = String::new();
            for row in &rows {
                let text = prepare_text(&row.text, &res);
                let prediction = predict(&trained, &text, &featurizer)?;
                let probs: BTreeMap<&str, f64> =
                    heads.iter().copied().zip(prediction.probs).collect();
                let decisions: BTreeMap<&str, bool> =
                    heads.iter().copied().zip(prediction.decisions).collect();
                let line = serde_json::json!({
                    "id": row.id,
                    "probs": probs,
                    "decisions": decisions,
                });
                lines.push_str(&line.to_string());
                lines.push('\n');
            }
            match output {
                Some(path) => {
                    fs::write(&path, lines).map_err(|e| Error::io(&path, e))?;
                    println!("wrote {} predictions to {}", rows.len(), path.display());
                }
                None => print!("{lines}"),
            }
        }
        Command::Eval {
            model,
            input,
            report,
        } => {
            let (trained, featurizer, _) = load_checkpoint(&model)?;
            let ds = load_labeled(&input, format)?;
            let (metrics, _) = evaluate_dataset(&trained, &featurizer, &ds)?;
            let mut text = serde_json::to_string_pretty(&metrics)
                .map_err(|e| Error::ShapeMismatch(format!("report serialization failed: {e}")))?;
            text.push('\n');
            match report {
                Some(path) => {
                    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                    println!("wrote report to {}", path.display());
                }
                None => print!("{text}"),
            }
        }
        Command::Pipeline => {
            let cfg = ExperimentConfig::load(require_config(cli.config.as_deref())?)?;
            let report = run_pipeline(&cfg)?;
            println!(
                "wrote report to {}",
                cfg.paths.output_dir.join("report.json").display()
            );
            if let Some(macro_f1) = report.metrics.macro_f1 {
                println!("macro_f1 = {macro_f1:.4}");
            }
        }
        Command::Synth { output } => {
            let path = require_config(cli.config.as_deref())?;
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: SynthSpec = toml::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            let corpus = generate(&spec)?;
            write_voted(&corpus.dataset, &output, format)?;
            println!(
                "wrote {} samples to {}",
                corpus.dataset.len(),
                output.display()
            );
        }
    }
    Ok(())
}

impl FeatureResourceArgs {
    fn paths(&self) -> ResourcePaths {
        ResourcePaths {
            vocabulary: self.vocabulary.clone(),
            pos_lexicon: self.pos_lexicon.clone(),
            pos_suffix: self.pos_suffix.clone(),
            ..ResourcePaths::default()
        }
    }
}

fn require_config(config: Option<&Path>) -> Result<&Path> {
    config.ok_or_else(|| Error::InvalidConfig("this command needs --config".to_string()))
}

fn parse_policy(policy: &str, t: Option<u8>) -> Result<SelectionPolicy> {
    match policy {
        "confidence" => Ok(SelectionPolicy::Confidence),
        "threshold" => {
            let t = t.ok_or_else(|| {
                Error::InvalidConfig("the threshold policy needs --t".to_string())
            })?;
            Ok(SelectionPolicy::Threshold { t })
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown policy {other:?}; expected threshold or confidence"
        ))),
    }
}

fn parse_loss(loss: &str) -> Result<LossKind> {
    match loss {
        "weighted_ce" => Ok(LossKind::WeightedCe),
        "f1_ce" => Ok(LossKind::F1Ce),
        "recall_ce" => Ok(LossKind::RecallCe),
        other => Err(Error::InvalidConfig(format!(
            "unknown loss {other:?}; expected weighted_ce, f1_ce, or recall_ce"
        ))),
    }
}

/// Label counts (label 0 first) of a binary dataset.
fn binary_counts(ds: &LabeledDataset) -> Result<(usize, usize)> {
    if ds.mode() == LabelMode::Multi {
        return Err(Error::InvalidConfig(
            "this operation needs binary label counts; the dataset is multilabel".to_string(),
        ));
    }
    let count1 = ds
        .samples()
        .iter()
        .filter(|s| s.labels.binary_label() == Some(true))
        .count();
    Ok((ds.len() - count1, count1))
}

/// Column names for a checkpoint's prediction heads. Six-head models score
/// every emotion; one-head models need --emotion since checkpoints do not
/// record which emotion they were trained on.
fn head_names(model: &emopipe::model::LinearModel, emotion: Option<&str>) -> Result<Vec<&'static str>> {
    match (model.heads(), emotion) {
        (6, _) => Ok(Emotion::ALL.iter().map(|e| e.name()).collect()),
        (1, Some(name)) => Ok(vec![name.parse::<Emotion>()?.name()]),
        (1, None) => Err(Error::InvalidConfig(
            "this checkpoint scores a single emotion; name it with --emotion".to_string(),
        )),
        (n, _) => Err(Error::Checkpoint(format!("unsupported head count {n}"))),
    }
}
