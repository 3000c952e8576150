use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::AnnotationError;
use crate::corpus::{AnnotatedSentence, CorpusError, LanguageCode, Tagset};

/// One versioned change to a lexicon; `tag: None` records a deletion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconChange {
    pub version: u64,
    pub surface: String,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LexiconEdit {
    Upsert { surface: String, tag: String },
    Delete { surface: String },
}

impl LexiconEdit {
    pub fn surface(&self) -> &str {
        match self {
            LexiconEdit::Upsert { surface, .. } | LexiconEdit::Delete { surface } => surface,
        }
    }
}

/// Per-language table of closed-class words and their fixed tags.
///
/// Every accepted edit bumps `version` by one, including re-adding an
/// existing pair, and is appended to `history` so that clients holding an
/// older version can catch up with [`ClosedClassLexicon::delta_since`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedClassLexicon {
    pub language: LanguageCode,
    pub entries: BTreeMap<String, String>,
    pub version: u64,
    pub history: Vec<LexiconChange>,
}

impl ClosedClassLexicon {
    pub fn new(language: LanguageCode) -> Self {
        Self { language, entries: BTreeMap::new(), version: 0, history: Vec::new() }
    }

    pub fn lookup(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    /// Validates an edit without applying it; returns the normalized surface.
    pub fn check_edit(edit: &LexiconEdit, tagset: &Tagset) -> Result<String, AnnotationError> {
        let surface: String = edit.surface().nfc().collect();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(AnnotationError::InvalidSurface(surface));
        }
        if let LexiconEdit::Upsert { tag, .. } = edit {
            if !tagset.contains(tag) {
                return Err(AnnotationError::TagNotInTagset(tag.clone()));
            }
        }
        Ok(surface)
    }

    /// Applies an edit in place and returns the new version.
    pub fn apply(&mut self, edit: LexiconEdit, tagset: &Tagset) -> Result<u64, AnnotationError> {
        let surface = Self::check_edit(&edit, tagset)?;
        let tag = match edit {
            LexiconEdit::Upsert { tag, .. } => {
                self.entries.insert(surface.clone(), tag.clone());
                Some(tag)
            }
            LexiconEdit::Delete { .. } => {
                self.entries.remove(&surface);
                None
            }
        };
        self.version += 1;
        self.history.push(LexiconChange { version: self.version, surface, tag });
        Ok(self.version)
    }

    /// The latest change per surface among those newer than `version`,
    /// ordered by version. Applying them in order to a copy at `version`
    /// yields the current entries.
    pub fn delta_since(&self, version: u64) -> Vec<LexiconChange> {
        let start = self.history.partition_point(|c| c.version <= version);
        let mut latest: BTreeMap<&str, &LexiconChange> = BTreeMap::new();
        for c in &self.history[start..] {
            latest.insert(&c.surface, c);
        }
        let mut out: Vec<LexiconChange> = latest.into_values().cloned().collect();
        out.sort_by_key(|c| c.version);
        out
    }
}

/// Returns a copy of `lexicon` with `edit` applied.
pub fn update_lexicon(
    lexicon: &ClosedClassLexicon,
    edit: LexiconEdit,
    tagset: &Tagset,
) -> Result<ClosedClassLexicon, AnnotationError> {
    let mut next = lexicon.clone();
    next.apply(edit, tagset)?;
    Ok(next)
}

/// Tags every untagged token whose surface is a lexicon key. Existing tags
/// are left alone. Returns the new sentence and the number of tags applied.
pub fn auto_tag(sentence: &AnnotatedSentence, lexicon: &ClosedClassLexicon) -> (AnnotatedSentence, usize) {
    let mut out = sentence.clone();
    let mut applied = 0;
    for t in out.tokens.iter_mut().filter(|t| t.tag.is_none()) {
        if let Some(tag) = lexicon.lookup(&t.token.surface) {
            t.tag = Some(tag.to_string());
            applied += 1;
        }
    }
    (out, applied)
}

/// `#LANG <code>` then `<surface>\t<tag>` lines in byte order of surface.
pub fn serialize_lexicon_file(lexicon: &ClosedClassLexicon) -> Vec<u8> {
    let mut out = format!("#LANG {}\n", lexicon.language);
    for (surface, tag) in &lexicon.entries {
        let _ = writeln!(out, "{surface}\t{tag}");
    }
    out.into_bytes()
}

/// Loads a lexicon file; each line counts as one upsert, so the loaded
/// lexicon's version equals its number of lines.
pub fn parse_lexicon_file(bytes: &[u8], tagset: &Tagset) -> Result<ClosedClassLexicon, AnnotationError> {
    let format = |line, reason: &str| CorpusError::Format { line, reason: reason.to_string() };
    let text = std::str::from_utf8(bytes).map_err(|_| format(1, "invalid UTF-8"))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let language =
        lines.next().and_then(|(_, l)| l.strip_prefix("#LANG ")).ok_or_else(|| format(1, "expected `#LANG <code>`"))?;
    let mut lexicon = ClosedClassLexicon::new(LanguageCode::new(language)?);
    for (n, line) in lines.filter(|(_, l)| !l.is_empty()) {
        let (surface, tag) = line.split_once('\t').ok_or_else(|| format(n, "expected `<surface>\\t<tag>`"))?;
        lexicon.apply(LexiconEdit::Upsert { surface: surface.into(), tag: tag.into() }, tagset)?;
    }
    Ok(lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn tagset() -> Tagset {
        Tagset::new("t", ["CC", "PSP", "PRP", "N"]).unwrap()
    }

    fn hin() -> LanguageCode {
        "hin".parse().unwrap()
    }

    fn upsert(s: &str, t: &str) -> LexiconEdit {
        LexiconEdit::Upsert { surface: s.into(), tag: t.into() }
    }

    fn sentence(text: &str) -> AnnotatedSentence {
        AnnotatedSentence::untagged("health-000001".parse().unwrap(), tokenize(text).unwrap())
    }

    #[test]
    fn upsert_bumps_version() {
        let v0 = ClosedClassLexicon::new(hin());
        let v1 = update_lexicon(&v0, upsert("और", "CC"), &tagset()).unwrap();
        assert_eq!(v1.version, 1);
        assert_eq!(v1.lookup("और"), Some("CC"));
        let v2 = update_lexicon(&v1, upsert("और", "CC"), &tagset()).unwrap();
        assert_eq!(v2.version, 2);
        assert_eq!(v2.entries, v1.entries);
        assert_eq!(
            update_lexicon(&v0, upsert("और", "FOO"), &tagset()),
            Err(AnnotationError::TagNotInTagset("FOO".into()))
        );
        assert!(matches!(update_lexicon(&v0, upsert("a b", "CC"), &tagset()), Err(AnnotationError::InvalidSurface(_))));
    }

    #[test]
    fn delete_and_delta() {
        let mut lex = ClosedClassLexicon::new(hin());
        lex.apply(upsert("और", "CC"), &tagset()).unwrap();
        lex.apply(upsert("में", "PSP"), &tagset()).unwrap();
        lex.apply(LexiconEdit::Delete { surface: "और".into() }, &tagset()).unwrap();
        assert_eq!(lex.version, 3);
        assert!(lex.lookup("और").is_none());
        assert!(lex.delta_since(3).is_empty());
        let delta = lex.delta_since(1);
        assert_eq!(delta.len(), 2);
        assert_eq!(delta[0].surface, "में");
        assert_eq!(delta[1], LexiconChange { version: 3, surface: "और".into(), tag: None });
        assert_eq!(lex.delta_since(0).len(), 2);
    }

    #[test]
    fn auto_tag_examples() {
        let mut lex = ClosedClassLexicon::new(hin());
        lex.apply(upsert("में", "PSP"), &tagset()).unwrap();
        let (out, n) = auto_tag(&sentence("में"), &lex);
        assert_eq!((out.tokens[0].tag.as_deref(), n), (Some("PSP"), 1));

        let mut human = sentence("में");
        human.tokens[0].tag = Some("N".into());
        let (out, n) = auto_tag(&human, &lex);
        assert_eq!((out, n), (human, 0));
    }

    #[test]
    fn lexicon_file_is_sorted() {
        let mut lex = ClosedClassLexicon::new(hin());
        lex.apply(upsert("में", "PSP"), &tagset()).unwrap();
        lex.apply(upsert("और", "CC"), &tagset()).unwrap();
        let bytes = serialize_lexicon_file(&lex);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text, "#LANG hin\nऔर\tCC\nमें\tPSP\n");
        let back = parse_lexicon_file(&bytes, &tagset()).unwrap();
        assert_eq!(back.entries, lex.entries);
        assert_eq!(back.version, 2);
    }

    fn edit_strategy() -> impl Strategy<Value = LexiconEdit> {
        let surfaces = prop::sample::select(vec!["और", "में", "वह", "यह", "को"]);
        let tags = prop::sample::select(vec!["CC", "PSP", "PRP"]);
        prop_oneof![
            (surfaces.clone(), tags).prop_map(|(s, t)| upsert(s, t)),
            surfaces.prop_map(|s| LexiconEdit::Delete { surface: s.into() }),
        ]
    }

    proptest! {
        #[test]
        fn versions_increase_and_entries_replay(edits in proptest::collection::vec(edit_strategy(), 0..40), since in 0u64..40) {
            let mut lex = ClosedClassLexicon::new(hin());
            let mut replay: BTreeMap<String, String> = BTreeMap::new();
            let mut last = 0;
            for e in &edits {
                let v = lex.apply(e.clone(), &tagset()).unwrap();
                prop_assert!(v > last);
                last = v;
                match e {
                    LexiconEdit::Upsert { surface, tag } => { replay.insert(surface.clone(), tag.clone()); }
                    LexiconEdit::Delete { surface } => { replay.remove(surface); }
                }
            }
            prop_assert_eq!(&lex.entries, &replay);

            // a client at `since` converges by applying the delta
            let since = since.min(lex.version);
            let mut client: BTreeMap<String, String> = BTreeMap::new();
            for c in &lex.history[..since as usize] {
                match &c.tag {
                    Some(t) => { client.insert(c.surface.clone(), t.clone()); }
                    None => { client.remove(&c.surface); }
                }
            }
            for c in lex.delta_since(since) {
                match c.tag {
                    Some(t) => { client.insert(c.surface, t); }
                    None => { client.remove(&c.surface); }
                }
            }
            prop_assert_eq!(client, replay);
        }
    }
}
