//! Native tests of the JSON operations behind the demo page.

use emopipe_demo::{augment_preview_json, normalize_preview_json, vote_policies_json};
use serde_json::{json, Value};

fn call(f: fn(&str) -> String, request: Value) -> Value {
    serde_json::from_str(&f(&request.to_string())).expect("response is JSON")
}

#[test]
fn normalize_preview_reports_rewrites_and_composition() {
    let out = call(
        normalize_preview_json,
        json!({ "text": "سلاااام #خبر_خوب 😀" }),
    );
    let normalized = out["normalized"].as_str().unwrap();
    assert!(!normalized.contains('#'), "normalized: {normalized}");
    assert_eq!(out["report"]["stretches_collapsed"].as_u64(), Some(1));
    assert_eq!(out["report"]["hashtags_unwrapped"].as_u64(), Some(1));
    assert_eq!(out["features"]["emojis"][0], "😀");
    assert_eq!(out["features"]["hashtags"][0], "خبر خوب");
    let composed = out["composed"].as_str().unwrap();
    assert_eq!(composed.matches("</s></s>").count(), 4, "composed: {composed}");
}

#[test]
fn augment_preview_is_deterministic_per_seed() {
    let request = json!({
        "text": "امروز هوا خیلی خوب است",
        "emotion": "fear",
        "seed": 9,
        "n_aug": 4,
    });
    let a = call(augment_preview_json, request.clone());
    let b = call(augment_preview_json, request);
    assert_eq!(a, b);
    assert_eq!(a["children"].as_array().unwrap().len(), 4);
    assert_eq!(a["config"]["n_aug"], 4);
    // Fear defaults fill the rest of the config.
    assert_eq!(a["config"]["insert_p"], 0.5);

    let other = call(
        augment_preview_json,
        json!({
            "text": "امروز هوا خیلی خوب است",
            "emotion": "fear",
            "seed": 10,
            "n_aug": 4,
        }),
    );
    assert_ne!(a["children"], other["children"]);
}

#[test]
fn vote_policies_cover_both_selection_rules() {
    let out = call(
        vote_policies_json,
        json!({ "votes": { "anger": 5, "fear": 3, "happiness": 1 } }),
    );
    // votes >= t flips at the vote count.
    assert_eq!(out["threshold"]["1"]["anger"], true);
    assert_eq!(out["threshold"]["5"]["anger"], true);
    assert_eq!(out["threshold"]["3"]["fear"], true);
    assert_eq!(out["threshold"]["4"]["fear"], false);
    assert_eq!(out["threshold"]["1"]["sadness"], false);
    // 4-5 votes are confident positives, 2-3 ambiguous, 0-1 negatives.
    assert_eq!(out["confidence"]["anger"], "positive");
    assert_eq!(out["confidence"]["fear"], "dropped");
    assert_eq!(out["confidence"]["happiness"], "negative");
    assert_eq!(out["confidence"]["wonder"], "negative");
}

#[test]
fn bad_requests_come_back_as_error_objects() {
    for (f, request) in [
        (normalize_preview_json as fn(&str) -> String, "not json".to_string()),
        (normalize_preview_json, json!({ "wrong": 1 }).to_string()),
        (augment_preview_json, json!({ "text": "x", "emotion": "joy" }).to_string()),
        (
            vote_policies_json,
            json!({ "votes": { "anger": 9 } }).to_string(),
        ),
    ] {
        let out: Value = serde_json::from_str(&f(&request)).unwrap();
        assert!(out["error"].is_string(), "response: {out}");
    }
}
