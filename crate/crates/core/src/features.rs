//! Surface feature extraction from raw tweets (emoji, hashtags, misspelled
//! tokens, POS tags) and composition of those features with the normalized
//! text into a single training string.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{self, is_persian_digit};

/// Separator token placed between the text and each feature group.
pub const SEP: &str = "</s></s>";

/// Coarse part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Punc,
    Num,
    Other,
}

impl PosTag {
    pub fn name(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Punc => "PUNC",
            PosTag::Num => "NUM",
            PosTag::Other => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NOUN" => Ok(PosTag::Noun),
            "VERB" => Ok(PosTag::Verb),
            "ADJ" => Ok(PosTag::Adj),
            "ADV" => Ok(PosTag::Adv),
            "PRON" => Ok(PosTag::Pron),
            "PUNC" => Ok(PosTag::Punc),
            "NUM" => Ok(PosTag::Num),
            "OTHER" => Ok(PosTag::Other),
            other => Err(Error::InvalidConfig(format!("unknown POS tag {other:?}"))),
        }
    }
}

/// A part-of-speech tagger. Implementations must be deterministic and
/// return exactly one tag per input token.
pub trait PosTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<PosTag>;
}

/// Deterministic tagger driven by a closed-class lexicon and suffix rules,
/// with punctuation/number detection first and `OTHER` as fallback.
#[derive(Debug, Clone)]
pub struct RuleTagger {
    lexicon: HashMap<String, PosTag>,
    /// Sorted longest-first so the most specific suffix wins.
    suffixes: Vec<(String, PosTag)>,
}

impl RuleTagger {
    /// Parses lexicon and suffix rules from TSV text (`entry<TAB>TAG`).
    pub fn from_tsv(lexicon_tsv: &str, suffix_tsv: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (word, tag) in parse_tagged(lexicon_tsv)? {
            lexicon.insert(word, tag);
        }
        let mut suffixes = parse_tagged(suffix_tsv)?;
        suffixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { lexicon, suffixes })
    }

    /// Loads lexicon and suffix rules from TSV files.
    pub fn from_files(lexicon_path: &Path, suffix_path: &Path) -> Result<Self> {
        let lex =
            std::fs::read_to_string(lexicon_path).map_err(|e| Error::io(lexicon_path, e))?;
        let suf = std::fs::read_to_string(suffix_path).map_err(|e| Error::io(suffix_path, e))?;
        Self::from_tsv(&lex, &suf)
    }

    /// The rule set shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_tsv(
            include_str!("../data/pos_lexicon.tsv"),
            include_str!("../data/pos_suffix.tsv"),
        )
        .expect("bundled tagger rules parse")
    }

    fn tag_one(&self, token: &str) -> PosTag {
        if token.is_empty() {
            return PosTag::Other;
        }
        if token.chars().all(|c| matches!(c, '.' | '?' | '!')) {
            return PosTag::Punc;
        }
        let digitish =
            |c: char| c.is_ascii_digit() || is_persian_digit(c) || c == '.';
        if token.chars().all(digitish) && !token.chars().all(|c| c == '.') {
            return PosTag::Num;
        }
        if let Some(&tag) = self.lexicon.get(token) {
            return tag;
        }
        for (suffix, tag) in &self.suffixes {
            if token.len() > suffix.len() && token.ends_with(suffix.as_str()) {
                return *tag;
            }
        }
        PosTag::Other
    }
}

impl PosTagger for RuleTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<PosTag> {
        tokens.iter().map(|t| self.tag_one(t)).collect()
    }
}

fn parse_tagged(tsv: &str) -> Result<Vec<(String, PosTag)>> {
    let mut out = Vec::new();
    for (lineno, line) in tsv.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (entry, tag) = match (parts.next(), parts.next(), parts.next()) {
            (Some(e), Some(t), None) if !e.is_empty() => (e, t),
            _ => {
                return Err(Error::MalformedRow {
                    line: lineno + 1,
                    msg: "expected `entry<TAB>TAG`".to_string(),
                })
            }
        };
        let tag = tag.parse().map_err(|_| Error::MalformedRow {
            line: lineno + 1,
            msg: format!("unknown POS tag {tag:?}"),
        })?;
        out.push((entry.to_string(), tag));
    }
    Ok(out)
}

/// Features pulled from one tweet, each list in order of appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBundle {
    /// Emoji sequences (one scalar plus any attached variation selectors).
    pub emojis: Vec<String>,
    /// Hashtag bodies, '#' stripped and '_' turned into ' '.
    pub hashtags: Vec<String>,
    /// Raw tokens missing from the vocabulary.
    pub misspelled: Vec<String>,
    /// One tag per whitespace token of the normalized text.
    pub pos_tags: Vec<PosTag>,
}

/// Extracts surface features. Emoji, hashtags, and misspellings come from
/// the raw text (normalization destroys them); POS tags come from the
/// normalized tokens.
pub fn extract(
    raw: &str,
    normalized: &str,
    vocabulary: &HashSet<String>,
    tagger: &dyn PosTagger,
) -> FeatureBundle {
    let tokens: Vec<&str> = normalized.split_whitespace().collect();
    let pos_tags = tagger.tag(&tokens);
    debug_assert_eq!(pos_tags.len(), tokens.len(), "tagger broke the length contract");
    FeatureBundle {
        emojis: scan_emoji(raw),
        hashtags: scan_hashtags(raw),
        misspelled: textprep::mark_misspelled(raw, vocabulary),
        pos_tags,
    }
}

/// Joins the normalized text and the four feature groups with `</s></s>`.
/// Always emits four separators; empty groups leave an empty segment.
pub fn compose(normalized: &str, bundle: &FeatureBundle) -> String {
    let pos: Vec<&str> = bundle.pos_tags.iter().map(|t| t.name()).collect();
    compose_segments(&[
        normalized.to_string(),
        bundle.emojis.join(" "),
        bundle.hashtags.join(" "),
        bundle.misspelled.join(" "),
        pos.join(" "),
    ])
}

/// Joins five already-built segments with the separator; inverse of
/// [`split_composed`].
pub fn compose_segments(segments: &[String; 5]) -> String {
    segments.join(&format!(" {SEP} "))
}

/// Splits a composed string back into its five trimmed segments.
pub fn split_composed(text: &str) -> Result<[String; 5]> {
    let parts: Vec<&str> = text.split(SEP).collect();
    if parts.len() != 5 {
        return Err(Error::ShapeMismatch(format!(
            "expected 5 composed segments, got {}",
            parts.len()
        )));
    }
    Ok(std::array::from_fn(|i| parts[i].trim().to_string()))
}

fn is_emoji_char(c: char) -> bool {
    matches!(u32::from(c),
        0x1F600..=0x1F64F   // emoticons
        | 0x1F300..=0x1F5FF // misc symbols and pictographs
        | 0x1F900..=0x1F9FF // supplemental symbols
        | 0x1F680..=0x1F6FF // transport and map
        | 0x2700..=0x27BF)  // dingbats
}

fn is_variation_selector(c: char) -> bool {
    matches!(c, '\u{FE0E}' | '\u{FE0F}')
}

/// Lists emoji in order of appearance, keeping variation selectors attached
/// to the emoji they modify.
pub fn scan_emoji(raw: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut attached = false;
    for c in raw.chars() {
        if is_emoji_char(c) {
            out.push(c.to_string());
            attached = true;
        } else if attached && is_variation_selector(c) {
            out.last_mut().expect("attached implies an entry").push(c);
        } else {
            attached = false;
        }
    }
    out
}

/// Lists hashtag bodies in order of appearance. A body runs from '#' to the
/// next whitespace or '#', so bodies never contain '#'; '_' becomes ' '.
pub fn scan_hashtags(raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '#' {
            let mut j = i + 1;
            while j < chars.len() && !chars[j].is_whitespace() && chars[j] != '#' {
                j += 1;
            }
            if j > i + 1 {
                out.push(
                    chars[i + 1..j]
                        .iter()
                        .map(|&c| if c == '_' { ' ' } else { c })
                        .collect(),
                );
                i = j;
                continue;
            }
        }
        i += 1;
    }
    out
}
