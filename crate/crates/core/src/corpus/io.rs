//! JSONL / CSV ingestion and serialization.
//!
//! JSONL is the canonical interchange format (tweets contain commas and
//! newlines); CSV is supported for ingestion convenience with RFC-4180
//! quoting. Vote and label columns are named by the lowercase English
//! emotion names, in canonical order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BinarySample, Emotion, LabelMode, LabelSet, LabeledDataset, Labels, Origin, VotedDataset,
    VotedSample, Votes,
};
use crate::error::{Error, Result};

/// On-disk representation of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown format {other:?}; expected jsonl or csv"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VotedRow {
    id: String,
    text: String,
    anger: i64,
    fear: i64,
    happiness: i64,
    hatred: i64,
    sadness: i64,
    wonder: i64,
}

impl VotedRow {
    fn from_sample(s: &VotedSample) -> Self {
        let v = s.votes.as_array();
        VotedRow {
            id: s.id.clone(),
            text: s.text.clone(),
            anger: v[0] as i64,
            fear: v[1] as i64,
            happiness: v[2] as i64,
            hatred: v[3] as i64,
            sadness: v[4] as i64,
            wonder: v[5] as i64,
        }
    }

    fn into_sample(self, line: usize) -> Result<VotedSample> {
        let raw = [
            self.anger,
            self.fear,
            self.happiness,
            self.hatred,
            self.sadness,
            self.wonder,
        ];
        let mut counts = [0u8; 6];
        for (i, (&value, emotion)) in raw.iter().zip(Emotion::ALL).enumerate() {
            if !(0..=5).contains(&value) {
                return Err(Error::VoteOutOfRange {
                    line,
                    field: emotion.name(),
                    value,
                });
            }
            counts[i] = value as u8;
        }
        VotedSample::new(self.id, self.text, Votes::new(counts)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MultiRow {
    id: String,
    text: String,
    anger: i64,
    fear: i64,
    happiness: i64,
    hatred: i64,
    sadness: i64,
    wonder: i64,
    origin: String,
    parent: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BinaryRow {
    id: String,
    text: String,
    emotion: String,
    label: i64,
    origin: String,
    parent: Option<String>,
}

fn origin_to_row(origin: &Origin) -> (String, Option<String>) {
    match origin {
        Origin::Original => ("original".into(), None),
        Origin::Augmented { parent } => ("augmented".into(), Some(parent.clone())),
    }
}

fn origin_from_row(origin: &str, parent: Option<String>, line: usize) -> Result<Origin> {
    match origin {
        "original" => Ok(Origin::Original),
        "augmented" => {
            let parent = parent.filter(|p| !p.is_empty()).ok_or(Error::MalformedRow {
                line,
                msg: "origin=augmented requires a parent id".into(),
            })?;
            Ok(Origin::Augmented { parent })
        }
        other => Err(Error::MalformedRow {
            line,
            msg: format!("unknown origin {other:?}"),
        }),
    }
}

fn bit(value: i64, field: &str, line: usize) -> Result<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::MalformedRow {
            line,
            msg: format!("label {field} must be 0 or 1, got {other}"),
        }),
    }
}

impl MultiRow {
    fn from_sample(s: &BinarySample) -> Self {
        let flags = match &s.labels {
            Labels::Multi(set) => set.as_array(),
            Labels::Binary { .. } => unreachable!("multilabel writer fed a binary sample"),
        };
        let (origin, parent) = origin_to_row(&s.origin);
        MultiRow {
            id: s.id.clone(),
            text: s.text.clone(),
            anger: flags[0] as i64,
            fear: flags[1] as i64,
            happiness: flags[2] as i64,
            hatred: flags[3] as i64,
            sadness: flags[4] as i64,
            wonder: flags[5] as i64,
            origin,
            parent,
        }
    }

    fn into_sample(self, line: usize) -> Result<BinarySample> {
        let flags = [
            bit(self.anger, "anger", line)?,
            bit(self.fear, "fear", line)?,
            bit(self.happiness, "happiness", line)?,
            bit(self.hatred, "hatred", line)?,
            bit(self.sadness, "sadness", line)?,
            bit(self.wonder, "wonder", line)?,
        ];
        if self.text.trim().is_empty() {
            return Err(Error::EmptyText { id: self.id });
        }
        Ok(BinarySample {
            id: self.id,
            text: self.text,
            labels: Labels::Multi(LabelSet::new(flags)),
            origin: origin_from_row(&self.origin, self.parent, line)?,
        })
    }
}

impl BinaryRow {
    fn from_sample(s: &BinarySample) -> Self {
        let (emotion, label) = match &s.labels {
            Labels::Binary { emotion, label } => (*emotion, *label),
            Labels::Multi(_) => unreachable!("binary writer fed a multilabel sample"),
        };
        let (origin, parent) = origin_to_row(&s.origin);
        BinaryRow {
            id: s.id.clone(),
            text: s.text.clone(),
            emotion: emotion.name().into(),
            label: label as i64,
            origin,
            parent,
        }
    }

    fn into_sample(self, line: usize) -> Result<BinarySample> {
        let emotion: Emotion = self.emotion.parse().map_err(|_| Error::MalformedRow {
            line,
            msg: format!("unknown emotion {:?}", self.emotion),
        })?;
        if self.text.trim().is_empty() {
            return Err(Error::EmptyText { id: self.id });
        }
        Ok(BinarySample {
            id: self.id,
            text: self.text,
            labels: Labels::Binary {
                emotion,
                label: bit(self.label, "label", line)?,
            },
            origin: origin_from_row(&self.origin, self.parent, line)?,
        })
    }
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn read_jsonl_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let reader = open_reader(path)?;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: T = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            line: lineno,
            msg: e.to_string(),
        })?;
        rows.push((lineno, row));
    }
    Ok(rows)
}

fn write_jsonl_rows<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut writer = open_writer(path)?;
    for row in rows {
        let line = serde_json::to_string(&row).expect("row serialization cannot fail");
        writeln!(writer, "{line}").map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn read_csv_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for result in reader.deserialize::<T>() {
        match result {
            Ok(row) => {
                // +1: csv positions point at the record's start line.
                let line = rows.len() + 2;
                rows.push((line, row));
            }
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(rows.len() + 2);
                return Err(Error::MalformedRow {
                    line,
                    msg: e.to_string(),
                });
            }
        }
    }
    Ok(rows)
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::io(path, io)
            } else {
                unreachable!()
            }
        }
        _ => Error::MalformedRow {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        },
    }
}

/// Load a voted dataset; row order is preserved.
pub fn load_voted(path: &Path, format: Format) -> Result<VotedDataset> {
    let rows: Vec<(usize, VotedRow)> = match format {
        Format::Jsonl => read_jsonl_rows(path)?,
        Format::Csv => read_csv_rows(path)?,
    };
    let samples = rows
        .into_iter()
        .map(|(line, row)| row.into_sample(line))
        .collect::<Result<Vec<_>>>()?;
    VotedDataset::new(samples)
}

pub fn write_voted(ds: &VotedDataset, path: &Path, format: Format) -> Result<()> {
    let rows = ds.samples().iter().map(VotedRow::from_sample);
    match format {
        Format::Jsonl => write_jsonl_rows(path, rows),
        Format::Csv => {
            if ds.is_empty() {
                return write_csv_header(
                    path,
                    &["id", "text", "anger", "fear", "happiness", "hatred", "sadness", "wonder"],
                );
            }
            write_csv_rows(path, rows)
        }
    }
}

/// Load a labeled dataset, inferring binary vs multi-label mode from the
/// columns present. An empty JSONL file loads as an empty multi-label
/// dataset (JSONL carries no header to say otherwise).
pub fn load_labeled(path: &Path, format: Format) -> Result<LabeledDataset> {
    let is_binary = sniff_binary(path, format)?;
    if is_binary {
        let rows: Vec<(usize, BinaryRow)> = match format {
            Format::Jsonl => read_jsonl_rows(path)?,
            Format::Csv => read_csv_rows(path)?,
        };
        let samples = rows
            .into_iter()
            .map(|(line, row)| row.into_sample(line))
            .collect::<Result<Vec<_>>>()?;
        let mode = match &samples.first().map(|s| &s.labels) {
            Some(Labels::Binary { emotion, .. }) => LabelMode::Binary(*emotion),
            _ => LabelMode::Multi,
        };
        LabeledDataset::new(mode, samples)
    } else {
        let rows: Vec<(usize, MultiRow)> = match format {
            Format::Jsonl => read_jsonl_rows(path)?,
            Format::Csv => read_csv_rows(path)?,
        };
        let samples = rows
            .into_iter()
            .map(|(line, row)| row.into_sample(line))
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(LabelMode::Multi, samples)
    }
}

fn sniff_binary(path: &Path, format: Format) -> Result<bool> {
    match format {
        Format::Jsonl => {
            let reader = open_reader(path)?;
            for line in reader.lines() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
                        line: 1,
                        msg: e.to_string(),
                    })?;
                return Ok(value.get("emotion").is_some());
            }
            Ok(false)
        }
        Format::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
            let headers = reader.headers().map_err(|e| csv_error(path, e))?;
            Ok(headers.iter().any(|h| h == "emotion"))
        }
    }
}

pub fn write_labeled(ds: &LabeledDataset, path: &Path, format: Format) -> Result<()> {
    match (ds.mode(), format) {
        (LabelMode::Binary(_), Format::Jsonl) => {
            write_jsonl_rows(path, ds.samples().iter().map(BinaryRow::from_sample))
        }
        (LabelMode::Multi, Format::Jsonl) => {
            write_jsonl_rows(path, ds.samples().iter().map(MultiRow::from_sample))
        }
        (LabelMode::Binary(_), Format::Csv) => {
            if ds.is_empty() {
                return write_csv_header(
                    path,
                    &["id", "text", "emotion", "label", "origin", "parent"],
                );
            }
            write_csv_rows(path, ds.samples().iter().map(BinaryRow::from_sample))
        }
        (LabelMode::Multi, Format::Csv) => {
            if ds.is_empty() {
                return write_csv_header(
                    path,
                    &[
                        "id", "text", "anger", "fear", "happiness", "hatred", "sadness", "wonder",
                        "origin", "parent",
                    ],
                );
            }
            write_csv_rows(path, ds.samples().iter().map(MultiRow::from_sample))
        }
    }
}

// csv::Writer only emits the header from the first serialized record, so an
// empty dataset needs it written by hand.
fn write_csv_header(path: &Path, columns: &[&str]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer
        .write_record(columns)
        .map_err(|e| csv_error(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn sample(id: &str, text: &str, counts: [u8; 6]) -> VotedSample {
        VotedSample::new(id, text, Votes::new(counts).unwrap()).unwrap()
    }

    #[test]
    fn voted_roundtrip_both_formats() {
        let dir = TempDir::new().unwrap();
        let ds = VotedDataset::new(vec![
            sample("t1", "سلام دنیا 😀 #خوب", [4, 0, 0, 1, 0, 0]),
            sample("t2", "متن, با \"نقل‌قول\"\u{200c} و کاما", [0, 5, 2, 0, 3, 1]),
        ])
        .unwrap();
        for format in [Format::Jsonl, Format::Csv] {
            let path = dir.path().join(match format {
                Format::Jsonl => "v.jsonl",
                Format::Csv => "v.csv",
            });
            write_voted(&ds, &path, format).unwrap();
            let loaded = load_voted(&path, format).unwrap();
            assert_eq!(loaded, ds);
        }
    }

    #[test]
    fn vote_out_of_range_names_line_and_field() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"id":"a","text":"x","anger":0,"fear":0,"happiness":0,"hatred":0,"sadness":0,"wonder":0}"#,
                "\n",
                r#"{"id":"b","text":"y","anger":6,"fear":0,"happiness":0,"hatred":0,"sadness":0,"wonder":0}"#,
                "\n"
            ),
        )
        .unwrap();
        let err = load_voted(&path, Format::Jsonl).unwrap_err();
        match err {
            Error::VoteOutOfRange { line, field, value } => {
                assert_eq!(line, 2);
                assert_eq!(field, "anger");
                assert_eq!(value, 6);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn malformed_row_names_line() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\":\"a\"\nnot json\n").unwrap();
        let err = load_voted(&path, Format::Jsonl).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_id_rejected_on_load() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("dup.jsonl");
        let row = r#"{"id":"a","text":"x","anger":0,"fear":0,"happiness":0,"hatred":0,"sadness":0,"wonder":0}"#;
        std::fs::write(&path, format!("{row}\n{row}\n")).unwrap();
        assert!(matches!(
            load_voted(&path, Format::Jsonl).unwrap_err(),
            Error::DuplicateId { .. }
        ));
    }

    #[test]
    fn empty_labeled_dataset_files() {
        let dir = TempDir::new().unwrap();
        let ds = LabeledDataset::new(LabelMode::Multi, vec![]).unwrap();

        let jsonl = dir.path().join("empty.jsonl");
        write_labeled(&ds, &jsonl, Format::Jsonl).unwrap();
        assert_eq!(std::fs::read_to_string(&jsonl).unwrap(), "");
        assert_eq!(load_labeled(&jsonl, Format::Jsonl).unwrap().len(), 0);

        let csv = dir.path().join("empty.csv");
        write_labeled(&ds, &csv, Format::Csv).unwrap();
        let content = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(content.lines().count(), 1, "header only: {content:?}");
        assert_eq!(load_labeled(&csv, Format::Csv).unwrap().len(), 0);
    }

    #[test]
    fn multilabel_jsonl_has_six_label_fields() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("m.jsonl");
        let samples = (0..3)
            .map(|i| BinarySample {
                id: format!("s{i}"),
                text: "متن".into(),
                labels: Labels::Multi(LabelSet::new([i == 0, false, true, false, false, false])),
                origin: Origin::Original,
            })
            .collect();
        let ds = LabeledDataset::new(LabelMode::Multi, samples).unwrap();
        write_labeled(&ds, &path, Format::Jsonl).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(content.lines().count(), 3);
        for line in content.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for e in Emotion::ALL {
                assert!(v.get(e.name()).is_some(), "missing {e} in {line}");
            }
        }
        assert_eq!(load_labeled(&path, Format::Jsonl).unwrap(), ds);
    }

    #[test]
    fn binary_roundtrip_with_augmented_origin() {
        let dir = TempDir::new().unwrap();
        let samples = vec![
            BinarySample {
                id: "a".into(),
                text: "اصل".into(),
                labels: Labels::Binary {
                    emotion: Emotion::Fear,
                    label: true,
                },
                origin: Origin::Original,
            },
            BinarySample {
                id: "a-aug0".into(),
                text: "بدل".into(),
                labels: Labels::Binary {
                    emotion: Emotion::Fear,
                    label: true,
                },
                origin: Origin::Augmented { parent: "a".into() },
            },
        ];
        let ds = LabeledDataset::new(LabelMode::Binary(Emotion::Fear), samples).unwrap();
        for (name, format) in [("b.jsonl", Format::Jsonl), ("b.csv", Format::Csv)] {
            let path = dir.path().join(name);
            write_labeled(&ds, &path, format).unwrap();
            assert_eq!(load_labeled(&path, format).unwrap(), ds);
        }
    }
}
