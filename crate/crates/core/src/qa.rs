//! Comparing, merging and scoring annotations of the same text by several
//! annotators.
//!
//! Agreement only counts positions tagged by both annotators; the number of
//! such joint positions is always reported alongside the score.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::UserId;
use crate::corpus::{CorpusFile, SentenceId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QaError {
    #[error("versions differ in text at {0}")]
    TextMismatch(String),
    #[error("merging needs at least two versions")]
    TooFewVersions,
    #[error("no position is tagged by both annotators")]
    NoJointPositions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationVersion {
    pub file_id: String,
    pub annotator: UserId,
    pub file: CorpusFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub id: SentenceId,
    pub index: usize,
    pub per_annotator: Vec<(UserId, Option<String>)>,
}

/// Fails unless every version has the same sentence ids and token surfaces.
fn check_same_text(versions: &[&AnnotationVersion]) -> Result<(), QaError> {
    let base = &versions[0].file;
    for v in &versions[1..] {
        let other = &v.file;
        if other.sentences.len() != base.sentences.len() {
            return Err(QaError::TextMismatch(format!("sentence count of {}", v.file_id)));
        }
        for (a, b) in base.sentences.iter().zip(&other.sentences) {
            if a.id != b.id {
                return Err(QaError::TextMismatch(b.id.to_string()));
            }
            if !a.surfaces().eq(b.surfaces()) {
                return Err(QaError::TextMismatch(a.id.to_string()));
            }
        }
    }
    Ok(())
}

/// Positions `(sentence, index)` with the tag each version assigns there.
fn positions<'a>(
    versions: &'a [&'a AnnotationVersion],
) -> impl Iterator<Item = (&'a SentenceId, usize, Vec<Option<&'a str>>)> + 'a {
    let base = &versions[0].file;
    base.sentences.iter().enumerate().flat_map(move |(si, s)| {
        (0..s.tokens.len()).map(move |ti| {
            let tags = versions.iter().map(|v| v.file.sentences[si].tokens[ti].tag.as_deref()).collect();
            (&s.id, ti, tags)
        })
    })
}

fn disagreement(versions: &[&AnnotationVersion], id: &SentenceId, index: usize, tags: &[Option<&str>]) -> Disagreement {
    Disagreement {
        id: id.clone(),
        index,
        per_annotator: versions.iter().zip(tags).map(|(v, t)| (v.annotator.clone(), t.map(String::from))).collect(),
    }
}

/// Every position where the two versions' tags differ (an absent tag is a
/// value of its own), in file order.
pub fn diff_annotations(a: &AnnotationVersion, b: &AnnotationVersion) -> Result<Vec<Disagreement>, QaError> {
    let versions = [a, b];
    check_same_text(&versions)?;
    Ok(positions(&versions)
        .filter(|(_, _, tags)| tags[0] != tags[1])
        .map(|(id, index, tags)| disagreement(&versions, id, index, &tags))
        .collect())
}

/// Majority merge into a gold file.
///
/// A tag carried by more than half of the versions wins. Any other
/// position is left untagged; it goes to the adjudication queue unless all
/// versions agree (including all leaving it untagged).
pub fn merge_gold(versions: &[AnnotationVersion]) -> Result<(CorpusFile, Vec<Disagreement>), QaError> {
    if versions.len() < 2 {
        return Err(QaError::TooFewVersions);
    }
    let refs: Vec<&AnnotationVersion> = versions.iter().collect();
    check_same_text(&refs)?;
    let mut gold = versions[0].file.clone();
    let mut queue = Vec::new();
    let n = versions.len();
    let mut merged = Vec::new();
    for (id, index, tags) in positions(&refs) {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tags.iter().flatten() {
            *counts.entry(t).or_default() += 1;
        }
        let winner = counts.iter().find(|(_, &c)| 2 * c > n).map(|(t, _)| t.to_string());
        if winner.is_none() && tags.iter().any(|t| *t != tags[0]) {
            queue.push(disagreement(&refs, id, index, &tags));
        }
        merged.push(winner);
    }
    for (slot, tag) in gold.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()).zip(merged) {
        slot.tag = tag;
    }
    Ok((gold, queue))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedAgreement {
    pub value: f64,
    pub joint: usize,
    pub matches: usize,
}

/// Tag pairs at positions tagged in both versions.
fn joint_pairs<'a>(a: &'a AnnotationVersion, b: &'a AnnotationVersion) -> Result<Vec<(&'a str, &'a str)>, QaError> {
    check_same_text(&[a, b])?;
    Ok(a.file
        .sentences
        .iter()
        .zip(&b.file.sentences)
        .flat_map(|(x, y)| x.tokens.iter().zip(&y.tokens))
        .filter_map(|(x, y)| Some((x.tag.as_deref()?, y.tag.as_deref()?)))
        .collect())
}

/// Share of jointly tagged positions on which the tags match; 1.0 when
/// there are none.
pub fn observed_agreement(a: &AnnotationVersion, b: &AnnotationVersion) -> Result<ObservedAgreement, QaError> {
    let pairs = joint_pairs(a, b)?;
    let matches = pairs.iter().filter(|(x, y)| x == y).count();
    let joint = pairs.len();
    let value = if joint == 0 { 1.0 } else { matches as f64 / joint as f64 };
    Ok(ObservedAgreement { value, joint, matches })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub joint: usize,
    pub observed: f64,
    pub expected: f64,
    pub kappa: f64,
}

/// Cohen's kappa over jointly tagged positions, with chance agreement from
/// each annotator's marginal tag distribution. When both annotators use a
/// single identical tag throughout (chance agreement 1) kappa is 1.
pub fn cohen_kappa(a: &AnnotationVersion, b: &AnnotationVersion) -> Result<Kappa, QaError> {
    let pairs = joint_pairs(a, b)?;
    let joint = pairs.len();
    if joint == 0 {
        return Err(QaError::NoJointPositions);
    }
    let mut marginals: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut matches = 0u64;
    for (x, y) in &pairs {
        marginals.entry(x).or_default().0 += 1;
        marginals.entry(y).or_default().1 += 1;
        matches += u64::from(x == y);
    }
    let n = joint as u64;
    let chance: u64 = marginals.values().map(|(ca, cb)| ca * cb).sum();
    let observed = matches as f64 / n as f64;
    let expected = chance as f64 / (n * n) as f64;
    let kappa = if chance == n * n { 1.0 } else { (observed - expected) / (1.0 - expected) };
    Ok(Kappa { joint, observed, expected, kappa })
}

/// One line of an agreement report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub file: String,
    pub annotators: (UserId, UserId),
    pub kappa: Option<Kappa>,
    pub joint: usize,
}

impl AgreementRow {
    pub fn compute(file: impl Into<String>, a: &AnnotationVersion, b: &AnnotationVersion) -> Result<Self, QaError> {
        let kappa = match cohen_kappa(a, b) {
            Ok(k) => Some(k),
            Err(QaError::NoJointPositions) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            file: file.into(),
            annotators: (a.annotator.clone(), b.annotator.clone()),
            joint: kappa.map_or(0, |k| k.joint),
            kappa,
        })
    }
}

/// Tab-separated agreement table; scores have four decimals and are `-`
/// when there is no joint position.
pub fn agreement_table(rows: &[AgreementRow]) -> String {
    let mut out = String::from("file\tannotators\tjoint\tp_o\tp_e\tkappa\n");
    for r in rows {
        let (po, pe, k) = match r.kappa {
            Some(k) => (format!("{:.4}", k.observed), format!("{:.4}", k.expected), format!("{:.4}", k.kappa)),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(out, "{}\t{}/{}\t{}\t{po}\t{pe}\t{k}", r.file, r.annotators.0, r.annotators.1, r.joint);
    }
    out
}
