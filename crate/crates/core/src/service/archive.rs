//! Project export archives.
//!
//! Archives are plain tar files whose bytes depend only on project state:
//! entries are sorted by path and carry zero mtime, uid and gid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::admin::{AdminError, Project};
use crate::annotation::serialize_lexicon_file;
use crate::corpus::{serialize_annotated_file, LanguageCode, SentenceId};

pub const PROJECT_ENTRY: &str = "project.json";
pub const INDEX_ENTRY: &str = "index.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// The full project state as JSON; can be imported again.
    Native,
    /// One annotated-format file per corpus file, plus lexicons.
    Columnar,
}

impl std::str::FromStr for ExportFormat {
    type Err = AdminError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(ExportFormat::Native),
            "columnar" => Ok(ExportFormat::Columnar),
            other => Err(AdminError::ValidationFailed(format!("unknown export format {other:?}"))),
        }
    }
}

/// Sentence id × language table naming the files that hold each version.
/// Cells list file ids separated by commas, or `-` when none.
pub fn parallel_index(project: &Project) -> String {
    let languages: Vec<&LanguageCode> = project.config().languages.iter().collect();
    let mut rows: BTreeMap<&SentenceId, BTreeMap<&LanguageCode, Vec<&str>>> = BTreeMap::new();
    for f in project.files() {
        for id in f.file.ids() {
            rows.entry(id).or_default().entry(&f.file.language).or_default().push(f.file_id.as_str());
        }
    }
    let mut out = String::from("sid");
    for l in &languages {
        let _ = write!(out, "\t{l}");
    }
    out.push('\n');
    for (id, cells) in rows {
        out.push_str(&id.to_string());
        for l in &languages {
            match cells.get(l) {
                Some(ids) => {
                    let _ = write!(out, "\t{}", ids.join(","));
                }
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}

fn entries(project: &Project, format: ExportFormat) -> BTreeMap<String, Vec<u8>> {
    let mut entries = BTreeMap::new();
    entries.insert(INDEX_ENTRY.to_string(), parallel_index(project).into_bytes());
    match format {
        ExportFormat::Native => {
            let json = serde_json::to_vec_pretty(project).expect("project state serializes");
            entries.insert(PROJECT_ENTRY.to_string(), json);
        }
        ExportFormat::Columnar => {
            for f in project.files() {
                entries
                    .insert(format!("files/{}/{}.tsv", f.file.language, f.file_id), serialize_annotated_file(&f.file));
            }
            for lex in project.lexicons() {
                entries.insert(format!("lexicons/{}.tsv", lex.language), serialize_lexicon_file(lex));
            }
        }
    }
    entries
}

/// Builds the archive. Equal states give identical bytes.
pub fn export_archive(project: &Project, format: ExportFormat) -> Vec<u8> {
    let mut builder = tar::Builder::new(Vec::new());
    for (path, data) in entries(project, format) {
        let mut header = tar::Header::new_ustar();
        header.set_size(data.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_uid(0);
        header.set_gid(0);
        header.set_entry_type(tar::EntryType::Regular);
        builder.append_data(&mut header, &path, data.as_slice()).expect("writing to memory");
    }
    builder.into_inner().expect("writing to memory")
}

/// Reads the project state back out of a native archive.
pub fn import_native(archive: &[u8]) -> Result<Project, AdminError> {
    let bad = |e: std::io::Error| AdminError::ValidationFailed(format!("archive: {e}"));
    let mut reader = tar::Archive::new(archive);
    for entry in reader.entries().map_err(bad)? {
        let mut entry = entry.map_err(bad)?;
        if entry.path().map_err(bad)?.to_str() == Some(PROJECT_ENTRY) {
            let mut json = Vec::new();
            entry.read_to_end(&mut json).map_err(bad)?;
            return serde_json::from_slice(&json)
                .map_err(|e| AdminError::ValidationFailed(format!("project.json: {e}")));
        }
    }
    Err(AdminError::ValidationFailed(format!("archive has no {PROJECT_ENTRY}")))
}

/// Lists entry paths and contents, in archive order.
pub fn read_entries(archive: &[u8]) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut reader = tar::Archive::new(archive);
    let mut out = Vec::new();
    for entry in reader.entries()? {
        let mut entry = entry?;
        let path = entry.path()?.to_string_lossy().into_owned();
        let mut data = Vec::new();
        entry.read_to_end(&mut data)?;
        out.push((path, data));
    }
    Ok(out)
}
