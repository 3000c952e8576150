//! Line-oriented UTF-8 file formats.
//!
//! Raw files carry one sentence per line:
//!
//! ```text
//! #LANG hin
//! #DOMAIN health
//! health-000001	यह घर है
//! ```
//!
//! Annotated files carry one token per line, each sentence introduced by a
//! `#SID` line and followed by exactly one blank line. `_` marks an absent
//! tag:
//!
//! ```text
//! #LANG hin
//! #DOMAIN health
//! #SID health-000001
//! यह	PRP
//! घर	_
//!
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use unicode_normalization::UnicodeNormalization;

use super::types::{is_valid_tag_label, ABSENT_TAG};
use super::{
    tokenize, AnnotatedSentence, AnnotatedToken, CorpusError, CorpusFile, DomainLabel, LanguageCode, SentenceId,
    Tagset, Token, WordAlignment,
};

fn decode(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        CorpusError::Format { line, reason: "invalid UTF-8".into() }
    })
}

fn format_err(line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Format { line, reason: reason.into() }
}

/// Reads the `#LANG` / `#DOMAIN` header from the first two lines.
fn parse_header<'a, I>(lines: &mut I) -> Result<(LanguageCode, DomainLabel), CorpusError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let (n, line) = lines.next().ok_or_else(|| format_err(1, "missing #LANG header"))?;
    let lang = line.strip_prefix("#LANG ").ok_or_else(|| format_err(n, "expected `#LANG <code>`"))?;
    let lang = LanguageCode::new(lang).map_err(|e| format_err(n, e.to_string()))?;
    let (n, line) = lines.next().ok_or_else(|| format_err(2, "missing #DOMAIN header"))?;
    let domain = line.strip_prefix("#DOMAIN ").ok_or_else(|| format_err(n, "expected `#DOMAIN <label>`"))?;
    let domain = DomainLabel::new(domain).map_err(|e| format_err(n, e.to_string()))?;
    Ok((lang, domain))
}

fn push_checked(
    sentences: &mut Vec<AnnotatedSentence>,
    domain: &DomainLabel,
    sentence: AnnotatedSentence,
) -> Result<(), CorpusError> {
    if sentence.id.domain() != domain {
        return Err(CorpusError::IdDomainMismatch(sentence.id));
    }
    if let Some(prev) = sentences.last() {
        if prev.id == sentence.id {
            return Err(CorpusError::DuplicateId(sentence.id));
        }
        if prev.id.serial() > sentence.id.serial() {
            return Err(if sentences.iter().any(|s| s.id == sentence.id) {
                CorpusError::DuplicateId(sentence.id)
            } else {
                CorpusError::IdOutOfOrder(sentence.id)
            });
        }
    }
    sentences.push(sentence);
    Ok(())
}

/// Parses an uploaded raw file into an untagged [`CorpusFile`]. Blank lines
/// are ignored.
pub fn parse_raw_file(bytes: &[u8]) -> Result<CorpusFile, CorpusError> {
    let text = decode(bytes)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (language, domain) = parse_header(&mut lines)?;
    let mut sentences = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line.split_once('\t').ok_or_else(|| format_err(n, "expected `<id>\\t<text>`"))?;
        let id: SentenceId = id.parse().map_err(|e: CorpusError| format_err(n, e.to_string()))?;
        let tokens = tokenize(body).map_err(|_| format_err(n, "sentence text is empty"))?;
        push_checked(&mut sentences, &domain, AnnotatedSentence::untagged(id, tokens))?;
    }
    Ok(CorpusFile { language, domain, sentences })
}

/// Writes the raw form. Tags are dropped.
pub fn serialize_raw_file(file: &CorpusFile) -> Vec<u8> {
    let mut out = format!("#LANG {}\n#DOMAIN {}\n", file.language, file.domain);
    for s in &file.sentences {
        let _ = writeln!(out, "{}\t{}", s.id, s.text());
    }
    out.into_bytes()
}

pub fn serialize_annotated_file(file: &CorpusFile) -> Vec<u8> {
    let mut out = format!("#LANG {}\n#DOMAIN {}\n", file.language, file.domain);
    for s in &file.sentences {
        write_sentence_block(&mut out, s);
    }
    out.into_bytes()
}

/// Appends one `#SID` block, including its trailing blank line.
fn write_sentence_block(out: &mut String, s: &AnnotatedSentence) {
    let _ = writeln!(out, "#SID {}", s.id);
    for t in &s.tokens {
        let tag = t.tag.as_deref().unwrap_or(ABSENT_TAG);
        let _ = writeln!(out, "{}\t{}", t.token.surface, tag);
    }
    out.push('\n');
}

/// Parses the annotated format. The layout must be canonical: any deviation
/// from what [`serialize_annotated_file`] produces is a format error. With a
/// tagset, every present tag must belong to it.
pub fn parse_annotated_file(bytes: &[u8], tagset: Option<&Tagset>) -> Result<CorpusFile, CorpusError> {
    let text = decode(bytes)?;
    let body =
        text.strip_suffix('\n').ok_or_else(|| format_err(text.lines().count().max(1), "missing final newline"))?;
    let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let (language, domain) = parse_header(&mut lines)?;
    let mut sentences = Vec::new();

    while let Some((n, line)) = lines.next() {
        let id = line.strip_prefix("#SID ").ok_or_else(|| format_err(n, "expected `#SID <id>`"))?;
        let id: SentenceId = id.parse().map_err(|e: CorpusError| format_err(n, e.to_string()))?;
        let mut tokens = Vec::new();
        let mut closed = false;
        for (n, line) in lines.by_ref() {
            if line.is_empty() {
                closed = true;
                break;
            }
            let mut fields = line.split('\t');
            let (Some(surface), Some(tag), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(format_err(n, "expected `<surface>\\t<tag>`"));
            };
            if surface.is_empty() || surface.chars().any(char::is_whitespace) {
                return Err(format_err(n, "invalid token surface"));
            }
            if surface.nfc().ne(surface.chars()) {
                return Err(format_err(n, "surface is not NFC normalized"));
            }
            let tag = match tag {
                ABSENT_TAG => None,
                t if is_valid_tag_label(t) => {
                    if let Some(ts) = tagset {
                        if !ts.contains(t) {
                            return Err(CorpusError::UnknownTag { tag: t.to_string(), line: Some(n) });
                        }
                    }
                    Some(t.to_string())
                }
                _ => return Err(format_err(n, "invalid tag field")),
            };
            let index = tokens.len();
            tokens.push(AnnotatedToken { token: Token { surface: surface.to_string(), index }, tag });
        }
        if !closed {
            return Err(format_err(n, "sentence block not terminated by a blank line"));
        }
        if tokens.is_empty() {
            return Err(format_err(n, "sentence has no tokens"));
        }
        push_checked(&mut sentences, &domain, AnnotatedSentence { id, tokens })?;
    }
    Ok(CorpusFile { language, domain, sentences })
}

/// Writes alignment blocks: `#SID`, `#PAIR`, then one `<i>\t<j>` per link.
pub fn serialize_alignments(alignments: &[WordAlignment]) -> Vec<u8> {
    let mut out = String::new();
    for a in alignments {
        let _ = writeln!(out, "#SID {}\n#PAIR {} {}", a.id, a.source, a.target);
        for (i, j) in &a.links {
            let _ = writeln!(out, "{i}\t{j}");
        }
    }
    out.into_bytes()
}

pub fn parse_alignments(bytes: &[u8]) -> Result<Vec<WordAlignment>, CorpusError> {
    let text = decode(bytes)?;
    let mut out: Vec<WordAlignment> = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    while let Some((n, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let id = line.strip_prefix("#SID ").ok_or_else(|| format_err(n, "expected `#SID <id>`"))?;
        let id: SentenceId = id.parse().map_err(|e: CorpusError| format_err(n, e.to_string()))?;
        let (n, pair) = lines.next().ok_or_else(|| format_err(n + 1, "missing #PAIR line"))?;
        let pair = pair
            .strip_prefix("#PAIR ")
            .and_then(|p| p.split_once(' '))
            .ok_or_else(|| format_err(n, "expected `#PAIR <src> <tgt>`"))?;
        let source = LanguageCode::new(pair.0).map_err(|e| format_err(n, e.to_string()))?;
        let target = LanguageCode::new(pair.1).map_err(|e| format_err(n, e.to_string()))?;
        let mut links = BTreeSet::new();
        while let Some(&(n, line)) = lines.peek() {
            if line.starts_with("#SID ") || line.is_empty() {
                break;
            }
            lines.next();
            let (i, j) = line
                .split_once('\t')
                .and_then(|(i, j)| Some((i.parse().ok()?, j.parse().ok()?)))
                .ok_or_else(|| format_err(n, "expected `<i>\\t<j>`"))?;
            links.insert((i, j));
        }
        out.push(WordAlignment { id, source, target, links });
    }
    Ok(out)
}
