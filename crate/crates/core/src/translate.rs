//! Word-for-word gloss through a bilingual dictionary.
//!
//! Dictionary files start with `#PAIR <src> <tgt>` and carry one
//! `<source>\t<cand1>|<cand2>|...` line per entry. The gloss keeps source
//! order and picks the first candidate of every known word; anything else
//! passes through and is flagged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{AnnotatedSentence, LanguageCode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("dictionary translates from {dictionary}, sentence is {sentence}")]
    LanguageMismatch { dictionary: LanguageCode, sentence: LanguageCode },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BilingualDictionary {
    pub source: LanguageCode,
    pub target: LanguageCode,
    pub entries: BTreeMap<String, Vec<String>>,
}

impl BilingualDictionary {
    pub fn pair_key(&self) -> String {
        format!("{}-{}", self.source, self.target)
    }

    pub fn candidates(&self, surface: &str) -> Option<&[String]> {
        self.entries.get(surface).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossToken {
    pub source: String,
    pub output: String,
    /// Set when the source word had no dictionary entry.
    pub untranslated: bool,
}

pub fn load_dictionary(bytes: &[u8]) -> Result<BilingualDictionary, TranslateError> {
    let err = |line, reason: &str| TranslateError::Format { line, reason: reason.into() };
    let text = std::str::from_utf8(bytes).map_err(|_| err(1, "invalid UTF-8"))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (source, target) = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("#PAIR "))
        .and_then(|p| p.split_once(' '))
        .ok_or_else(|| err(1, "expected `#PAIR <src> <tgt>`"))?;
    let source = LanguageCode::new(source).map_err(|e| err(1, &e.to_string()))?;
    let target = LanguageCode::new(target).map_err(|e| err(1, &e.to_string()))?;
    if source == target {
        return Err(err(1, "pair languages must differ"));
    }
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let (word, cands) = line.split_once('\t').ok_or_else(|| err(n, "expected `<source>\\t<candidates>`"))?;
        let word: String = word.trim().nfc().collect();
        if word.is_empty() {
            return Err(err(n, "empty source word"));
        }
        let cands: Vec<String> = cands.split('|').map(|c| c.trim().nfc().collect()).collect();
        if cands.iter().any(String::is_empty) {
            return Err(err(n, "empty target candidate"));
        }
        let slot = entries.entry(word).or_default();
        for c in cands {
            if !slot.contains(&c) {
                slot.push(c);
            }
        }
    }
    Ok(BilingualDictionary { source, target, entries })
}

/// Glosses a sentence written in `language`.
pub fn rough_translate(
    sentence: &AnnotatedSentence,
    language: &LanguageCode,
    dict: &BilingualDictionary,
) -> Result<Vec<GlossToken>, TranslateError> {
    if language != &dict.source {
        return Err(TranslateError::LanguageMismatch { dictionary: dict.source.clone(), sentence: language.clone() });
    }
    Ok(sentence
        .surfaces()
        .map(|s| match dict.candidates(s).and_then(<[String]>::first) {
            Some(c) => GlossToken { source: s.to_string(), output: c.clone(), untranslated: false },
            None => GlossToken { source: s.to_string(), output: s.to_string(), untranslated: true },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn sentence(text: &str) -> AnnotatedSentence {
        AnnotatedSentence::untagged("health-000001".parse().unwrap(), tokenize(text).unwrap())
    }

    fn hin() -> LanguageCode {
        "hin".parse().unwrap()
    }

    #[test]
    fn loads_candidates_in_order() {
        let d = load_dictionary("#PAIR hin eng\nघर\thouse|home\n".as_bytes()).unwrap();
        assert_eq!(d.candidates("घर").unwrap(), ["house", "home"]);
        assert_eq!(d.pair_key(), "hin-eng");
    }

    #[test]
    fn duplicate_keys_merge() {
        let d = load_dictionary("#PAIR hin eng\nघर\thouse|home\nघर\thome|dwelling\n".as_bytes()).unwrap();
        assert_eq!(d.entries.len(), 1);
        assert_eq!(d.candidates("घर").unwrap(), ["house", "home", "dwelling"]);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(load_dictionary(b"#PAIR hin eng\nx\t\n"), Err(TranslateError::Format { line: 2, .. })));
        assert!(matches!(load_dictionary(b"#PAIR hin eng\nx\ta||b\n"), Err(TranslateError::Format { line: 2, .. })));
        assert!(matches!(load_dictionary(b"#PAIR hin hin\n"), Err(TranslateError::Format { line: 1, .. })));
        assert!(matches!(load_dictionary(b"hello\n"), Err(TranslateError::Format { line: 1, .. })));
    }

    #[test]
    fn first_candidate_gloss() {
        let d = load_dictionary("#PAIR hin eng\nयह\tthis\nघर\thouse|home\n".as_bytes()).unwrap();
        let g = rough_translate(&sentence("यह घर"), &hin(), &d).unwrap();
        let out: Vec<&str> = g.iter().map(|t| t.output.as_str()).collect();
        assert_eq!(out, ["this", "house"]);
        assert!(g.iter().all(|t| !t.untranslated));
    }

    #[test]
    fn empty_dictionary_passes_through() {
        let d = load_dictionary(b"#PAIR hin eng\n").unwrap();
        let g = rough_translate(&sentence("यह घर है"), &hin(), &d).unwrap();
        assert!(g.iter().all(|t| t.untranslated && t.output == t.source));
    }

    #[test]
    fn wrong_source_language() {
        let d = load_dictionary(b"#PAIR eng hin\n").unwrap();
        assert!(matches!(rough_translate(&sentence("x"), &hin(), &d), Err(TranslateError::LanguageMismatch { .. })));
    }

    proptest! {
        #[test]
        fn gloss_outputs_are_candidates_or_sources(words in proptest::collection::vec(0usize..6, 1..12)) {
            let d = load_dictionary("#PAIR hin eng\nक\ta|b\nख\tc\nग\td|e|f\n".as_bytes()).unwrap();
            let vocab = ["क", "ख", "ग", "घ", "ङ", "च"];
            let text = words.iter().map(|&w| vocab[w]).collect::<Vec<_>>().join(" ");
            let g = rough_translate(&sentence(&text), &hin(), &d).unwrap();
            prop_assert_eq!(g.len(), words.len());
            for t in g {
                let ok = d.candidates(&t.source).is_some_and(|c| c.contains(&t.output)) || t.output == t.source;
                prop_assert!(ok);
            }
        }
    }
}
