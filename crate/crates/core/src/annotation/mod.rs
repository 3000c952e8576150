//! Tagset-constrained annotation: manual tagging, closed-class auto-tagging,
//! sentence editing, and completion accounting.

mod edit;
mod lexicon;

pub use edit::{edit_sentence, lcs_pairs, EditRecord};
pub use lexicon::{
    auto_tag, parse_lexicon_file, serialize_lexicon_file, update_lexicon, ClosedClassLexicon, LexiconChange,
    LexiconEdit,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedSentence, CorpusError, CorpusFile, LanguageCode, Tagset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("tag {0:?} is not in the project tagset")]
    TagNotInTagset(String),
    #[error("token index {index} out of range for a sentence of {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("edited text contains no tokens")]
    EmptyEdit,
    #[error("edited text is identical to the current sentence")]
    NoChange,
    #[error("lexicon surface {0:?} must be non-empty and contain no whitespace")]
    InvalidSurface(String),
    #[error("lexicon is for {lexicon}, text is {text}")]
    LanguageMismatch { lexicon: LanguageCode, text: LanguageCode },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Sets the tag of one token, returning the updated sentence.
pub fn assign_tag(
    sentence: &AnnotatedSentence,
    index: usize,
    tag: &str,
    tagset: &Tagset,
) -> Result<AnnotatedSentence, AnnotationError> {
    if !tagset.contains(tag) {
        return Err(AnnotationError::TagNotInTagset(tag.to_string()));
    }
    let len = sentence.tokens.len();
    if index >= len {
        return Err(AnnotationError::IndexOutOfRange { index, len });
    }
    let mut out = sentence.clone();
    out.tokens[index].tag = Some(tag.to_string());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub complete: usize,
    pub total: usize,
    pub fraction: f64,
}

impl Completion {
    pub fn is_complete(&self) -> bool {
        self.complete == self.total
    }

    pub fn remaining(&self) -> usize {
        self.total - self.complete
    }
}

/// Counts sentences whose every token carries a tag.
pub fn completion_status(file: &CorpusFile) -> Completion {
    let total = file.sentences.len();
    let complete = file.sentences.iter().filter(|s| s.is_complete()).count();
    let fraction = if total == 0 { 0.0 } else { complete as f64 / total as f64 };
    Completion { complete, total, fraction }
}
