//! Browser bindings for a static demo page. Three operations wrap the text
//! pipeline behind JSON-string interfaces so the page needs no framework:
//! a normalization preview, a mutation-augmentation explorer, and a
//! vote-to-label policy explorer.
//!
//! Every operation takes a JSON request and returns a JSON response; bad
//! input comes back as `{"error": "..."}` instead of a panic. The inner
//! functions are plain Rust so the whole surface tests natively; the
//! `wasm-bindgen` exports only exist on wasm32 targets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use emopipe::augment::{augment_sample, default_config, StaticLexiconProvider};
use emopipe::corpus::{Emotion, VotedDataset, VotedSample, Votes};
use emopipe::features::extract;
use emopipe::pipeline::prepare_text;
use emopipe::selection::{apply_confidence, apply_threshold};
use emopipe::textprep::normalize;
use emopipe::Error;

fn respond<T: Serialize>(result: Result<T, Error>) -> String {
    match result {
        Ok(value) => serde_json::to_string(&value)
            .unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn parse<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T, Error> {
    serde_json::from_str(input).map_err(|e| Error::InvalidConfig(format!("bad request: {e}")))
}

#[derive(Deserialize)]
struct TextRequest {
    text: String,
}

#[derive(Serialize)]
struct NormalizePreview {
    normalized: String,
    report: emopipe::textprep::PrepReport,
    features: emopipe::features::FeatureBundle,
    composed: String,
}

/// Request: `{"text": "..."}`. Response: the normalized text, the rewrite
/// counters, the extracted surface features, and the composed five-segment
/// training string.
pub fn normalize_preview_json(input: &str) -> String {
    respond(parse::<TextRequest>(input).map(|req| {
        let res = emopipe::pipeline::Resources::builtin();
        let (normalized, report) = normalize(&req.text, &res.prep);
        let features = extract(&req.text, &normalized, &res.vocabulary, &res.tagger);
        NormalizePreview {
            composed: prepare_text(&req.text, &res),
            normalized,
            report,
            features,
        }
    }))
}

#[derive(Deserialize)]
struct AugmentRequest {
    text: String,
    emotion: String,
    #[serde(default)]
    seed: u64,
    n_aug: Option<usize>,
    swap_p: Option<f64>,
    replace_p: Option<f64>,
    insert_p: Option<f64>,
    delete_p: Option<f64>,
}

#[derive(Serialize)]
struct AugmentPreview {
    config: emopipe::augment::AugmentConfig,
    children: Vec<String>,
}

/// Request: `{"text": "...", "emotion": "anger", "seed": 0}` plus optional
/// intensity overrides. Response: the effective config and the generated
/// variants, deterministic for a given seed.
pub fn augment_preview_json(input: &str) -> String {
    respond(parse::<AugmentRequest>(input).and_then(|req| {
        let mut cfg = default_config(req.emotion.parse::<Emotion>()?);
        if let Some(n) = req.n_aug {
            cfg.n_aug = n.min(50);
        }
        if let Some(p) = req.swap_p {
            cfg.swap_p = p;
        }
        if let Some(p) = req.replace_p {
            cfg.replace_p = p;
        }
        if let Some(p) = req.insert_p {
            cfg.insert_p = p;
        }
        if let Some(p) = req.delete_p {
            cfg.delete_p = p;
        }
        cfg.validate()?;
        let provider = StaticLexiconProvider::builtin();
        let children = augment_sample(&req.text, &cfg, &provider, req.seed)?;
        Ok(AugmentPreview { config: cfg, children })
    }))
}

#[derive(Deserialize)]
struct VotesRequest {
    votes: BTreeMap<String, u8>,
}

#[derive(Serialize)]
struct PolicyPreview {
    /// Labels under `votes >= t` for every threshold.
    threshold: BTreeMap<String, BTreeMap<String, bool>>,
    /// Per-emotion outcome of the confidence policy: `positive`,
    /// `negative`, or `dropped`.
    confidence: BTreeMap<String, String>,
}

/// Request: `{"votes": {"anger": 5, "fear": 2, ...}}` (missing emotions
/// count as zero votes). Response: what every selection policy would make
/// of the sample.
pub fn vote_policies_json(input: &str) -> String {
    respond(parse::<VotesRequest>(input).and_then(|req| {
        let mut counts = [0u8; 6];
        for (name, votes) in &req.votes {
            counts[name.parse::<Emotion>()?.index()] = *votes;
        }
        let sample = VotedSample::new("demo", "متن نمونه", Votes::new(counts)?)?;
        let ds = VotedDataset::new(vec![sample])?;

        let mut threshold = BTreeMap::new();
        for t in 1..=5u8 {
            let labeled = apply_threshold(&ds, t)?;
            let labels = match &labeled.samples()[0].labels {
                emopipe::corpus::Labels::Multi(set) => set.as_array(),
                emopipe::corpus::Labels::Binary { .. } => unreachable!("threshold is multilabel"),
            };
            let row: BTreeMap<String, bool> = Emotion::ALL
                .iter()
                .map(|e| (e.name().to_string(), labels[e.index()]))
                .collect();
            threshold.insert(t.to_string(), row);
        }

        let mut confidence = BTreeMap::new();
        for emotion in Emotion::ALL {
            let kept = apply_confidence(&ds, emotion)?;
            let outcome = match kept.samples().first() {
                None => "dropped",
                Some(s) if s.labels.binary_label() == Some(true) => "positive",
                Some(_) => "negative",
            };
            confidence.insert(emotion.name().to_string(), outcome.to_string());
        }

        Ok(PolicyPreview { threshold, confidence })
    }))
}

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::wasm_bindgen;

    #[wasm_bindgen]
    pub fn normalize_preview(input: &str) -> String {
        crate::normalize_preview_json(input)
    }

    #[wasm_bindgen]
    pub fn augment_preview(input: &str) -> String {
        crate::augment_preview_json(input)
    }

    #[wasm_bindgen]
    pub fn vote_policies(input: &str) -> String {
        crate::vote_policies_json(input)
    }
}
