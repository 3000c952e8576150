//! Bringing outside material into project shape: cleanup of noisy text,
//! sentence segmentation, id assignment and foreign tagset conversion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{
    tokenize, AnnotatedSentence, CorpusError, CorpusFile, DomainLabel, SentenceId, Tagset, MAX_SERIAL,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdaptError {
    #[error("serial {0} exceeds the six-digit id range")]
    SerialOverflow(u64),
    #[error("sentence serials start at 1")]
    ZeroSerial,
    #[error("tag {tag:?} at {id} token {index} has no mapping")]
    UnmappedTag { tag: String, id: SentenceId, index: usize },
    #[error("mapping target {0:?} is not in the project tagset")]
    TargetNotInTagset(String),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub text: String,
    /// Invalid UTF-8 sequences replaced by U+FFFD.
    pub replacements: usize,
}

/// Cleans raw bytes: invalid UTF-8 becomes U+FFFD, a leading byte-order
/// mark and control characters other than LF and TAB are dropped, runs of
/// other whitespace become one space, and the result is NFC normalized.
pub fn normalize_text(bytes: &[u8]) -> NormalizedText {
    let mut decoded = String::with_capacity(bytes.len());
    let mut replacements = 0;
    for chunk in bytes.utf8_chunks() {
        decoded.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            decoded.push(char::REPLACEMENT_CHARACTER);
            replacements += 1;
        }
    }
    let mut cleaned = String::with_capacity(decoded.len());
    let mut in_space = false;
    for c in decoded.chars() {
        if c == '\n' || c == '\t' {
            cleaned.push(c);
            in_space = false;
        } else if c.is_control() || (c == '\u{feff}' && cleaned.is_empty()) {
            continue;
        } else if c.is_whitespace() {
            if !in_space {
                cleaned.push(' ');
            }
            in_space = true;
        } else {
            cleaned.push(c);
            in_space = false;
        }
    }
    NormalizedText { text: cleaned.nfc().collect(), replacements }
}

pub const SENTENCE_TERMINATORS: &[char] = &['।', '॥', '.', '!', '?'];

/// Splits after a terminator that is followed by whitespace or the end of
/// the text. Terminators stay with their sentence; internal whitespace is
/// collapsed to single spaces.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for word in text.split_whitespace() {
        current.push(word);
        if word.ends_with(SENTENCE_TERMINATORS) {
            out.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        out.push(current.join(" "));
    }
    out
}

/// Numbers sentences consecutively from `start_serial` and tokenizes them.
pub fn assign_ids(
    sentences: &[String],
    domain: &DomainLabel,
    start_serial: u32,
) -> Result<Vec<AnnotatedSentence>, AdaptError> {
    if start_serial == 0 {
        return Err(AdaptError::ZeroSerial);
    }
    if let Some(n) = sentences.len().checked_sub(1) {
        let last = start_serial as u64 + n as u64;
        if last > MAX_SERIAL as u64 {
            return Err(AdaptError::SerialOverflow(last));
        }
    }
    sentences
        .iter()
        .zip(start_serial..)
        .map(|(text, serial)| {
            let id = SentenceId::new(domain.clone(), serial)?;
            Ok(AnnotatedSentence::untagged(id, tokenize(text)?))
        })
        .collect()
}

/// Foreign tag → project tag table.
///
/// File form: `#FROM <tagset-name>` then `<foreign>\t<project-tag>` lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagMapping {
    pub source_tagset: String,
    pub entries: BTreeMap<String, String>,
}

impl TagMapping {
    pub fn new(
        source_tagset: impl Into<String>,
        entries: BTreeMap<String, String>,
        project: &Tagset,
    ) -> Result<Self, AdaptError> {
        if let Some(bad) = entries.values().find(|t| !project.contains(t)) {
            return Err(AdaptError::TargetNotInTagset(bad.clone()));
        }
        Ok(Self { source_tagset: source_tagset.into(), entries })
    }

    pub fn parse(text: &str, project: &Tagset) -> Result<Self, AdaptError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let name = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix("#FROM "))
            .ok_or(AdaptError::Format { line: 1, reason: "expected `#FROM <tagset-name>`".into() })?;
        let mut entries = BTreeMap::new();
        for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let (from, to) = line
                .split_once('\t')
                .ok_or_else(|| AdaptError::Format { line: n, reason: "expected `<foreign>\\t<tag>`".into() })?;
            entries.insert(from.trim().to_string(), to.trim().to_string());
        }
        Self::new(name.trim(), entries, project)
    }
}

/// Rewrites every present tag through `mapping`. Any tag without an image
/// is an error; untagged tokens stay untagged.
pub fn map_foreign_tags(file: &CorpusFile, mapping: &TagMapping) -> Result<CorpusFile, AdaptError> {
    let mut out = file.clone();
    for s in &mut out.sentences {
        for (index, t) in s.tokens.iter_mut().enumerate() {
            if let Some(tag) = &t.tag {
                let image = mapping.entries.get(tag).ok_or_else(|| AdaptError::UnmappedTag {
                    tag: tag.clone(),
                    id: s.id.clone(),
                    index,
                })?;
                t.tag = Some(image.clone());
            }
        }
    }
    Ok(out)
}
