use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CorpusError, CorpusFile, CorpusStats, LanguageCode, ParallelUnit, SentenceId, WordAlignment};

/// A sentence id missing from some languages of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub id: SentenceId,
    pub missing: Vec<LanguageCode>,
}

/// Groups the sentences of several files into parallel units by id.
///
/// Units come back ordered by id. A gap is reported for every id that is
/// absent in at least one language present among `files`.
pub fn build_parallel_units(files: &[CorpusFile]) -> Result<(Vec<ParallelUnit>, Vec<Gap>), CorpusError> {
    if files.is_empty() {
        return Err(CorpusError::NoFiles);
    }
    let languages: BTreeSet<&LanguageCode> = files.iter().map(|f| &f.language).collect();
    let mut units: BTreeMap<SentenceId, ParallelUnit> = BTreeMap::new();
    for file in files {
        for s in &file.sentences {
            let unit = units
                .entry(s.id.clone())
                .or_insert_with(|| ParallelUnit { id: s.id.clone(), versions: BTreeMap::new() });
            if unit.versions.insert(file.language.clone(), s.clone()).is_some() {
                return Err(CorpusError::ConflictingText { id: s.id.clone(), language: file.language.clone() });
            }
        }
    }
    let gaps = units
        .values()
        .filter(|u| u.versions.len() < languages.len())
        .map(|u| Gap {
            id: u.id.clone(),
            missing: languages.iter().filter(|l| !u.versions.contains_key(**l)).map(|l| (*l).clone()).collect(),
        })
        .collect();
    Ok((units.into_values().collect(), gaps))
}

pub fn corpus_stats(file: &CorpusFile) -> CorpusStats {
    let sentence_count = file.sentences.len();
    let token_count = file.token_count();
    let mean_tokens_per_sentence = if sentence_count == 0 { 0.0 } else { token_count as f64 / sentence_count as f64 };
    CorpusStats { sentence_count, token_count, mean_tokens_per_sentence }
}

/// A link whose token index falls outside its sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentViolation {
    pub link: (usize, usize),
    pub source_len: usize,
    pub target_len: usize,
}

/// Returns every out-of-bounds link. Empty link sets are valid.
pub fn validate_word_alignment(
    align: &WordAlignment,
    unit: &ParallelUnit,
) -> Result<Vec<AlignmentViolation>, CorpusError> {
    let len = |lang: &LanguageCode| {
        unit.versions.get(lang).map(|s| s.tokens.len()).ok_or_else(|| CorpusError::MissingLanguage(lang.clone()))
    };
    let source_len = len(&align.source)?;
    let target_len = len(&align.target)?;
    Ok(align
        .links
        .iter()
        .filter(|(i, j)| *i >= source_len || *j >= target_len)
        .map(|&link| AlignmentViolation { link, source_len, target_len })
        .collect())
}
