use unicode_normalization::UnicodeNormalization;

use super::{CorpusError, Token};

/// Characters detached from the edges of a whitespace-delimited word.
pub const DETACHED_PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', '(', ')', '।', '॥'];

fn is_detached(c: char) -> bool {
    DETACHED_PUNCTUATION.contains(&c)
}

/// Splits text into word tokens.
///
/// Words are whitespace-delimited; a maximal run of punctuation at either
/// edge of a word becomes a token of its own. Every surface is NFC
/// normalized.
pub fn tokenize(text: &str) -> Result<Vec<Token>, CorpusError> {
    let mut surfaces: Vec<&str> = Vec::new();
    for word in text.split_whitespace() {
        let head_end = word.find(|c| !is_detached(c)).unwrap_or(word.len());
        if head_end == word.len() {
            surfaces.push(word);
            continue;
        }
        let tail_start = word
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_detached(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(word.len());
        if head_end > 0 {
            surfaces.push(&word[..head_end]);
        }
        surfaces.push(&word[head_end..tail_start]);
        if tail_start < word.len() {
            surfaces.push(&word[tail_start..]);
        }
    }
    if surfaces.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    Ok(surfaces.into_iter().enumerate().map(|(index, s)| Token { surface: s.nfc().collect(), index }).collect())
}
