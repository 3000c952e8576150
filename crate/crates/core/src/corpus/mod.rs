//! Corpus value types, the tokenizer, and the on-disk text formats.

mod format;
mod parallel;
mod tokenize;
mod types;

pub use format::{
    parse_alignments, parse_annotated_file, parse_raw_file, serialize_alignments, serialize_annotated_file,
    serialize_raw_file,
};
pub use parallel::{build_parallel_units, corpus_stats, validate_word_alignment, AlignmentViolation, Gap};
pub use tokenize::{tokenize, DETACHED_PUNCTUATION};
pub use types::{
    AnnotatedSentence, AnnotatedToken, CorpusFile, CorpusStats, DomainLabel, LanguageCode, ParallelUnit, SentenceId,
    Tagset, Token, WordAlignment, ABSENT_TAG, MAX_SERIAL,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("text contains no tokens")]
    EmptyInput,
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("duplicate sentence id {0}")]
    DuplicateId(SentenceId),
    #[error("sentence id {0} is out of ascending order")]
    IdOutOfOrder(SentenceId),
    #[error("sentence id {0} does not belong to the file's domain")]
    IdDomainMismatch(SentenceId),
    #[error("unknown tag {tag:?}{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    UnknownTag { tag: String, line: Option<usize> },
    #[error("sentence {0} has no tokens")]
    EmptySentence(SentenceId),
    #[error("sentence {id}: malformed token at index {index}")]
    InvalidToken { id: SentenceId, index: usize },
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),
    #[error("invalid domain label {0:?}")]
    InvalidDomain(String),
    #[error("invalid sentence id {0:?}")]
    InvalidSentenceId(String),
    #[error("invalid tagset: {0}")]
    InvalidTagset(String),
    #[error("no files given")]
    NoFiles,
    #[error("sentence {id} appears twice for language {language}")]
    ConflictingText { id: SentenceId, language: LanguageCode },
    #[error("language {0} is not part of the parallel unit")]
    MissingLanguage(LanguageCode),
}
