use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::AnnotationError;
use crate::admin::UserId;
use crate::corpus::{tokenize, AnnotatedSentence, AnnotatedToken, SentenceId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRecord {
    pub id: SentenceId,
    pub old_text: String,
    pub new_text: String,
    pub editor: UserId,
    pub timestamp: DateTime<Utc>,
}

/// Index pairs `(old, new)` of a longest common subsequence of two
/// sequences. Among maximal alignments, the one using the earliest `old`
/// positions is chosen.
pub fn lcs_pairs<T: PartialEq>(old: &[T], new: &[T]) -> Vec<(usize, usize)> {
    let (n, m) = (old.len(), new.len());
    // suffix[i][j] = LCS length of old[i..] and new[j..]
    let mut suffix = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i][j] =
                if old[i] == new[j] { suffix[i + 1][j + 1] + 1 } else { suffix[i + 1][j].max(suffix[i][j + 1]) };
        }
    }
    let mut pairs = Vec::with_capacity(suffix[0][0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if old[i] == new[j] && suffix[i][j] == suffix[i + 1][j + 1] + 1 {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if suffix[i + 1][j] > suffix[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

/// Replaces a sentence's text, carrying tags over to tokens that survive
/// the edit (matched by longest common subsequence of surfaces).
pub fn edit_sentence(
    sentence: &AnnotatedSentence,
    new_text: &str,
    editor: &UserId,
    clock: DateTime<Utc>,
) -> Result<(AnnotatedSentence, EditRecord), AnnotationError> {
    let tokens = tokenize(new_text).map_err(|_| AnnotationError::EmptyEdit)?;
    let old: Vec<&str> = sentence.surfaces().collect();
    let new: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    if old == new {
        return Err(AnnotationError::NoChange);
    }
    let mut tags: Vec<Option<String>> = vec![None; new.len()];
    for (i, j) in lcs_pairs(&old, &new) {
        tags[j] = sentence.tokens[i].tag.clone();
    }
    let record = EditRecord {
        id: sentence.id.clone(),
        old_text: old.join(" "),
        new_text: new.join(" "),
        editor: editor.clone(),
        timestamp: clock,
    };
    let edited = AnnotatedSentence {
        id: sentence.id.clone(),
        tokens: tokens.into_iter().zip(tags).map(|(token, tag)| AnnotatedToken { token, tag }).collect(),
    };
    Ok((edited, record))
}
