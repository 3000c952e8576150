use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Largest serial that fits the six-digit canonical id form.
pub const MAX_SERIAL: u32 = 999_999;

/// Lowercase ASCII language identifier such as `hin` or `eng`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self, CorpusError> {
        let code = code.into();
        let ok = (2..=8).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase());
        if ok {
            Ok(Self(code))
        } else {
            Err(CorpusError::InvalidLanguage(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageCode {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> String {
        code.0
    }
}

/// Text domain of a corpus (`health`, `tourism`, ...).
///
/// Labels are lowercase identifiers: ASCII lowercase letters, digits, `_`
/// and `-`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DomainLabel(String);

impl DomainLabel {
    pub fn new(label: impl Into<String>) -> Result<Self, CorpusError> {
        let label = label.into();
        let ok = !label.is_empty()
            && label.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-');
        if ok {
            Ok(Self(label))
        } else {
            Err(CorpusError::InvalidDomain(label))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for DomainLabel {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for DomainLabel {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<DomainLabel> for String {
    fn from(label: DomainLabel) -> String {
        label.0
    }
}

/// Identifier shared by every language version of one sentence.
///
/// The canonical text form is `<domain>-<serial>` with the serial
/// zero-padded to six digits, e.g. `health-000042`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SentenceId {
    domain: DomainLabel,
    serial: u32,
}

impl SentenceId {
    pub fn new(domain: DomainLabel, serial: u32) -> Result<Self, CorpusError> {
        if serial == 0 || serial > MAX_SERIAL {
            return Err(CorpusError::InvalidSentenceId(format!("{domain}-{serial}")));
        }
        Ok(Self { domain, serial })
    }

    pub fn domain(&self) -> &DomainLabel {
        &self.domain
    }

    pub fn serial(&self) -> u32 {
        self.serial
    }
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:06}", self.domain, self.serial)
    }
}

impl FromStr for SentenceId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::InvalidSentenceId(s.to_string());
        let (domain, serial) = s.rsplit_once('-').ok_or_else(bad)?;
        if serial.len() != 6 || !serial.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let domain = DomainLabel::new(domain).map_err(|_| bad())?;
        let serial: u32 = serial.parse().map_err(|_| bad())?;
        Self::new(domain, serial).map_err(|_| bad())
    }
}

impl TryFrom<String> for SentenceId {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SentenceId> for String {
    fn from(id: SentenceId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

/// A token together with its (possibly absent) tag label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub token: Token,
    pub tag: Option<String>,
}

impl AnnotatedToken {
    pub fn surface(&self) -> &str {
        &self.token.surface
    }
}

/// The closed inventory of tag labels a project may use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TagsetRepr", into = "TagsetRepr")]
pub struct Tagset {
    name: String,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TagsetRepr {
    name: String,
    labels: Vec<String>,
}

impl TryFrom<TagsetRepr> for Tagset {
    type Error = CorpusError;
    fn try_from(r: TagsetRepr) -> Result<Self, Self::Error> {
        Tagset::new(r.name, r.labels)
    }
}

impl From<Tagset> for TagsetRepr {
    fn from(t: Tagset) -> Self {
        TagsetRepr { name: t.name, labels: t.labels }
    }
}

/// `_` is reserved as the absent-tag marker of the annotated file format.
pub const ABSENT_TAG: &str = "_";

impl Tagset {
    pub fn new<I, S>(name: impl Into<String>, labels: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(CorpusError::InvalidTagset("tagset has no labels".into()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !is_valid_tag_label(label) {
                return Err(CorpusError::InvalidTagset(format!("invalid label {label:?}")));
            }
            if !seen.insert(label.as_str()) {
                return Err(CorpusError::InvalidTagset(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self { name: name.into(), labels })
    }

    /// Parses a tagset file: a `#TAGSET <name>` header then one label per line.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut lines = text.lines();
        let name = lines
            .next()
            .and_then(|l| l.strip_prefix("#TAGSET "))
            .ok_or(CorpusError::Format { line: 1, reason: "expected `#TAGSET <name>`".into() })?;
        let labels = lines.map(str::trim).filter(|l| !l.is_empty());
        Self::new(name.trim(), labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

pub(crate) fn is_valid_tag_label(label: &str) -> bool {
    !label.is_empty() && label != ABSENT_TAG && label.bytes().all(|b| b.is_ascii_graphic())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: SentenceId,
    pub tokens: Vec<AnnotatedToken>,
}

impl AnnotatedSentence {
    /// Builds an untagged sentence from tokenizer output.
    pub fn untagged(id: SentenceId, tokens: Vec<Token>) -> Self {
        let tokens = tokens.into_iter().map(|token| AnnotatedToken { token, tag: None }).collect();
        Self { id, tokens }
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(AnnotatedToken::surface)
    }

    /// Surfaces joined by single spaces.
    pub fn text(&self) -> String {
        self.surfaces().collect::<Vec<_>>().join(" ")
    }

    pub fn is_complete(&self) -> bool {
        self.tokens.iter().all(|t| t.tag.is_some())
    }

    pub fn tagged_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.tag.is_some()).count()
    }

    pub(crate) fn check(&self, tagset: Option<&Tagset>) -> Result<(), CorpusError> {
        if self.tokens.is_empty() {
            return Err(CorpusError::EmptySentence(self.id.clone()));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            let s = &t.token.surface;
            if t.token.index != i || s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(CorpusError::InvalidToken { id: self.id.clone(), index: i });
            }
            if let (Some(tag), Some(tagset)) = (&t.tag, tagset) {
                if !tagset.contains(tag) {
                    return Err(CorpusError::UnknownTag { tag: tag.clone(), line: None });
                }
            }
        }
        Ok(())
    }
}

/// One language's file of sentences from a single domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub language: LanguageCode,
    pub domain: DomainLabel,
    pub sentences: Vec<AnnotatedSentence>,
}

impl CorpusFile {
    pub fn new(
        language: LanguageCode,
        domain: DomainLabel,
        sentences: Vec<AnnotatedSentence>,
    ) -> Result<Self, CorpusError> {
        let file = Self { language, domain, sentences };
        file.validate(None)?;
        Ok(file)
    }

    /// Checks the file invariants, and tag membership when a tagset is given.
    pub fn validate(&self, tagset: Option<&Tagset>) -> Result<(), CorpusError> {
        let mut last: Option<&SentenceId> = None;
        for s in &self.sentences {
            if s.id.domain() != &self.domain {
                return Err(CorpusError::IdDomainMismatch(s.id.clone()));
            }
            if let Some(prev) = last {
                if prev == &s.id {
                    return Err(CorpusError::DuplicateId(s.id.clone()));
                }
                if prev.serial() > s.id.serial() {
                    return Err(CorpusError::IdOutOfOrder(s.id.clone()));
                }
            }
            s.check(tagset)?;
            last = Some(&s.id);
        }
        Ok(())
    }

    pub fn sentence(&self, id: &SentenceId) -> Option<&AnnotatedSentence> {
        self.sentences
            .binary_search_by(|s| s.id.serial().cmp(&id.serial()))
            .ok()
            .map(|i| &self.sentences[i])
            .filter(|s| &s.id == id)
    }

    pub fn sentence_mut(&mut self, id: &SentenceId) -> Option<&mut AnnotatedSentence> {
        let i = self.sentences.binary_search_by(|s| s.id.serial().cmp(&id.serial())).ok()?;
        Some(&mut self.sentences[i]).filter(|s| &s.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &SentenceId> {
        self.sentences.iter().map(|s| &s.id)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// All language versions of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelUnit {
    pub id: SentenceId,
    pub versions: BTreeMap<LanguageCode, AnnotatedSentence>,
}

/// Word-level links between two language versions of one sentence. Links
/// may be partial: unlinked tokens are legal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordAlignment {
    pub id: SentenceId,
    pub source: LanguageCode,
    pub target: LanguageCode,
    pub links: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentence_count: usize,
    pub token_count: usize,
    /// Zero for an empty file.
    pub mean_tokens_per_sentence: f64,
}
