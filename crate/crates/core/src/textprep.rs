//! Tweet normalization: space correction, English-word handling, stretch
//! collapse, diacritic removal, hashtag unwrap, and residual character
//! filtering, plus out-of-vocabulary token marking.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Zero-width non-joiner, the Persian intra-word separator.
pub const ZWNJ: char = '\u{200C}';

/// Verbal prefixes that must attach to the following word with a ZWNJ.
const PREFIXES: [&str; 2] = ["\u{0645}\u{06CC}", "\u{0646}\u{0645}\u{06CC}"]; // می نمی

/// Nominal/adjectival suffixes that must attach to the preceding word.
/// Ordered so that standalone-token comparison needs no precedence logic.
const SUFFIXES: [&str; 6] = [
    "\u{0647}\u{0627}\u{06CC}\u{06CC}", // هایی
    "\u{0647}\u{0627}\u{06CC}",         // های
    "\u{0647}\u{0627}",                 // ها
    "\u{062A}\u{0631}\u{06CC}\u{0646}", // ترین
    "\u{062A}\u{0631}\u{06CC}",         // تری
    "\u{062A}\u{0631}",                 // تر
];

fn is_sentence_punct(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn in_arabic_block(c: char) -> bool {
    matches!(u32::from(c),
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
}

/// True for alphabetic characters in the Arabic/Persian Unicode blocks.
pub fn is_persian_letter(c: char) -> bool {
    c.is_alphabetic() && in_arabic_block(c)
}

/// True for the Extended Arabic-Indic digits U+06F0..U+06F9.
pub fn is_persian_digit(c: char) -> bool {
    matches!(c, '\u{06F0}'..='\u{06F9}')
}

/// Arabic short vowels and marks (U+064B..U+0652), superscript alef, tatweel.
fn is_diacritic(c: char) -> bool {
    matches!(u32::from(c), 0x064B..=0x0652 | 0x0670 | 0x0640)
}

/// Characters that survive normalization.
fn is_retained(c: char) -> bool {
    is_persian_letter(c)
        || c.is_ascii_digit()
        || is_persian_digit(c)
        || c.is_whitespace()
        || is_sentence_punct(c)
        || c == ZWNJ
}

/// Lookup tables for English-word handling during normalization.
#[derive(Debug, Clone)]
pub struct PrepResources {
    /// English token (lowercase) to Persian token.
    pub en_fa_dictionary: HashMap<String, String>,
    /// Latin letter (lowercase) to Persian letter sequence.
    pub translit_table: HashMap<char, String>,
}

impl PrepResources {
    /// Parses both tables from TSV text (`source<TAB>target` per line).
    pub fn from_tsv(dict_tsv: &str, translit_tsv: &str) -> Result<Self> {
        let mut en_fa_dictionary = HashMap::new();
        for (lineno, line) in dict_tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = split_tsv_pair(line, lineno + 1)?;
            if !key.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(Error::MalformedRow {
                    line: lineno + 1,
                    msg: format!("dictionary key {key:?} must be a single ASCII-letter token"),
                });
            }
            validate_target(&value, lineno + 1)?;
            en_fa_dictionary.insert(key.to_ascii_lowercase(), value);
        }

        let mut translit_table = HashMap::new();
        for (lineno, line) in translit_tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = split_tsv_pair(line, lineno + 1)?;
            let mut key_chars = key.chars();
            let letter = match (key_chars.next(), key_chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => c.to_ascii_lowercase(),
                _ => {
                    return Err(Error::MalformedRow {
                        line: lineno + 1,
                        msg: format!("transliteration key {key:?} must be one ASCII letter"),
                    })
                }
            };
            validate_target(&value, lineno + 1)?;
            translit_table.insert(letter, value);
        }

        Ok(Self { en_fa_dictionary, translit_table })
    }

    /// Loads both tables from TSV files.
    pub fn from_files(dict_path: &Path, translit_path: &Path) -> Result<Self> {
        let dict = std::fs::read_to_string(dict_path).map_err(|e| Error::io(dict_path, e))?;
        let translit =
            std::fs::read_to_string(translit_path).map_err(|e| Error::io(translit_path, e))?;
        Self::from_tsv(&dict, &translit)
    }

    /// The tables shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_tsv(
            include_str!("../data/en_fa_dict.tsv"),
            include_str!("../data/translit.tsv"),
        )
        .expect("bundled tables parse")
    }
}

fn split_tsv_pair(line: &str, lineno: usize) -> Result<(String, String)> {
    let mut parts = line.split('\t');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if !k.is_empty() && !v.is_empty() => {
            Ok((k.to_string(), v.to_string()))
        }
        _ => Err(Error::MalformedRow {
            line: lineno,
            msg: "expected exactly two tab-separated non-empty fields".to_string(),
        }),
    }
}

/// Replacement targets must be single tokens that survive normalization
/// untouched, otherwise repeated normalization would keep rewriting them.
fn validate_target(value: &str, lineno: usize) -> Result<()> {
    let ok = !value.is_empty()
        && value
            .chars()
            .all(|c| (is_retained(c) && !c.is_whitespace() && !c.is_ascii_digit()) || c == ZWNJ);
    if ok {
        Ok(())
    } else {
        Err(Error::MalformedRow {
            line: lineno,
            msg: format!("target {value:?} must be a single Persian token"),
        })
    }
}

/// Per-step rewrite counters for one normalization call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PrepReport {
    pub spaces_fixed: usize,
    pub translated_words: usize,
    pub transliterated_words: usize,
    pub stretches_collapsed: usize,
    pub diacritics_removed: usize,
    pub hashtags_unwrapped: usize,
    pub chars_dropped: usize,
    /// Hashtag bodies in order of appearance, '_' already turned into ' '.
    pub hashtag_bodies: Vec<String>,
}

/// Normalizes one raw tweet. Applies, in order: space correction,
/// English-word handling, stretched-letter collapse, diacritic removal,
/// hashtag unwrap, and residual character filtering. Idempotent.
pub fn normalize(text: &str, res: &PrepResources) -> (String, PrepReport) {
    let mut report = PrepReport::default();
    let t = fix_spacing(text, &mut report.spaces_fixed);
    let t = handle_english(&t, res, &mut report);
    let t = collapse_stretch(&t, &mut report.stretches_collapsed);
    let t = strip_diacritics(&t, &mut report.diacritics_removed);
    let t = unwrap_hashtags(&t, &mut report);
    let t = drop_residual(&t, &mut report.chars_dropped);
    // Dropped characters leave gaps that can expose new letter runs or
    // spacing defects (a deleted mark between identical letters, a ZWNJ now
    // next to a space), so the two structural passes run once more.
    let t = collapse_stretch(&t, &mut report.stretches_collapsed);
    let t = fix_spacing(&t, &mut report.spaces_fixed);
    (t, report)
}

/// Whitespace-splits `text` and returns the tokens missing from
/// `vocabulary`, in order, duplicates preserved. Callers that want
/// stretched words flagged must pass text from before stretch collapse.
pub fn mark_misspelled(text: &str, vocabulary: &HashSet<String>) -> Vec<String> {
    text.split_whitespace()
        .filter(|tok| !vocabulary.contains(*tok))
        .map(str::to_string)
        .collect()
}

/// Loads one vocabulary word per line, skipping blanks.
pub fn load_vocabulary(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_vocabulary(&text))
}

pub fn parse_vocabulary(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// The word list shipped with the crate.
pub fn builtin_vocabulary() -> HashSet<String> {
    parse_vocabulary(include_str!("../data/vocab.txt"))
}

/// Step 1 (and final sweep): drop misplaced ZWNJ, collapse whitespace runs,
/// put a space after sentence punctuation, join split affixes with ZWNJ.
fn fix_spacing(text: &str, fixes: &mut usize) -> String {
    let t = cleanup_zwnj(text, fixes);
    let t = collapse_whitespace(&t, fixes);
    let t = space_after_punct(&t, fixes);
    join_affixes(&t, fixes)
}

/// Removes ZWNJ adjacent to whitespace or the string boundary and collapses
/// ZWNJ runs, so the separator only ever sits alone between two letters.
fn cleanup_zwnj(text: &str, fixes: &mut usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut prev_kept: Option<char> = None;
    for (i, &c) in chars.iter().enumerate() {
        if c == ZWNJ {
            let next = chars.get(i + 1);
            let bad_left = matches!(prev_kept, None | Some(ZWNJ)) |
                prev_kept.is_some_and(char::is_whitespace);
            let bad_right = match next {
                None => true,
                Some(n) => n.is_whitespace(),
            };
            if bad_left || bad_right {
                *fixes += 1;
                continue;
            }
        }
        out.push(c);
        prev_kept = Some(c);
    }
    out
}

/// Replaces each whitespace run with a single ' ' and trims the ends.
fn collapse_whitespace(text: &str, fixes: &mut usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if !c.is_whitespace() {
            out.push(c);
            continue;
        }
        let mut run_len = 1usize;
        let mut nonspace = c != ' ';
        while chars.peek().is_some_and(|n| n.is_whitespace()) {
            nonspace |= chars.next() != Some(' ');
            run_len += 1;
        }
        if out.is_empty() || chars.peek().is_none() {
            *fixes += 1; // trimmed a boundary run
        } else {
            if run_len > 1 || nonspace {
                *fixes += 1;
            }
            out.push(' ');
        }
    }
    out
}

/// Inserts a single space after a run of '.', '?', '!' that abuts text.
fn space_after_punct(text: &str, fixes: &mut usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        out.push(c);
        if is_sentence_punct(c) {
            if let Some(&next) = chars.get(i + 1) {
                if !next.is_whitespace() && !is_sentence_punct(next) {
                    out.push(' ');
                    *fixes += 1;
                }
            }
        }
    }
    out
}

/// Joins "می/نمی + word" and "word + ها/های/هایی/تر/تری/ترین" token pairs
/// with a ZWNJ. Expects single-space-separated input.
fn join_affixes(text: &str, fixes: &mut usize) -> String {
    if text.is_empty() {
        return String::new();
    }
    let mut out: Vec<String> = Vec::new();
    for tok in text.split(' ') {
        if let Some(prev) = out.last_mut() {
            let prefix_join = PREFIXES.contains(&prev.as_str())
                && tok.chars().next().is_some_and(is_persian_letter);
            let suffix_join = SUFFIXES.contains(&tok)
                && prev.chars().next_back().is_some_and(is_persian_letter);
            if prefix_join || suffix_join {
                prev.push(ZWNJ);
                prev.push_str(tok);
                *fixes += 1;
                continue;
            }
        }
        out.push(tok.to_string());
    }
    out.join(" ")
}

/// Step 2: rewrite each maximal ASCII-letter run through the dictionary,
/// falling back to per-letter transliteration. Letters missing from both
/// tables pass through for step 6 to drop.
fn handle_english(text: &str, res: &PrepResources, report: &mut PrepReport) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_alphabetic() {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && chars[j].is_ascii_alphabetic() {
            j += 1;
        }
        let word: String = chars[i..j].iter().map(|c| c.to_ascii_lowercase()).collect();
        if let Some(fa) = res.en_fa_dictionary.get(&word) {
            out.push_str(fa);
            report.translated_words += 1;
        } else {
            let mut mapped_any = false;
            for ch in word.chars() {
                match res.translit_table.get(&ch) {
                    Some(seq) => {
                        out.push_str(seq);
                        mapped_any = true;
                    }
                    None => out.push(ch),
                }
            }
            if mapped_any {
                report.transliterated_words += 1;
            }
        }
        i = j;
    }
    out
}

/// Step 3: reduce runs of three or more identical Persian letters to one.
fn collapse_stretch(text: &str, count: &mut usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i + 1;
        while j < chars.len() && chars[j] == c {
            j += 1;
        }
        if j - i >= 3 && is_persian_letter(c) {
            out.push(c);
            *count += 1;
        } else {
            for _ in i..j {
                out.push(c);
            }
        }
        i = j;
    }
    out
}

/// Step 4: delete Arabic diacritics, superscript alef, and tatweel.
fn strip_diacritics(text: &str, removed: &mut usize) -> String {
    text.chars()
        .filter(|&c| {
            if is_diacritic(c) {
                *removed += 1;
                false
            } else {
                true
            }
        })
        .collect()
}

/// Step 5: turn `#body` into ` body` with intra-tag '_' as spaces,
/// recording each body.
fn unwrap_hashtags(text: &str, report: &mut PrepReport) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '#' {
            let mut j = i + 1;
            while j < chars.len() && !chars[j].is_whitespace() && chars[j] != '#' {
                j += 1;
            }
            if j > i + 1 {
                let mut body = String::new();
                for &c in &chars[i + 1..j] {
                    body.push(if c == '_' { ' ' } else { c });
                }
                out.push(' ');
                out.push_str(&body);
                report.hashtags_unwrapped += 1;
                report.hashtag_bodies.push(body);
                i = j;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

/// Step 6: replace everything outside the retained set with a space.
fn drop_residual(text: &str, dropped: &mut usize) -> String {
    text.chars()
        .map(|c| {
            if is_retained(c) {
                c
            } else {
                *dropped += 1;
                ' '
            }
        })
        .collect()
}
