use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AdminError, AssignmentState, Operation, Project, SessionRecord, UserId};
use crate::annotation::completion_status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressScope {
    Project,
    Language,
    User,
    /// Session history of every user.
    TimeLog,
}

impl std::str::FromStr for ProgressScope {
    type Err = AdminError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "project" => Ok(ProgressScope::Project),
            "language" => Ok(ProgressScope::Language),
            "user" => Ok(ProgressScope::User),
            "timelog" | "time_log" => Ok(ProgressScope::TimeLog),
            other => Err(AdminError::ValidationFailed(format!("unknown progress scope {other:?}"))),
        }
    }
}

/// Work totals for one unit of a scope (the project, a language or a user).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRow {
    pub unit: String,
    pub files_total: usize,
    pub files_assigned: usize,
    pub files_completed: usize,
    pub sentences_total: usize,
    pub sentences_complete: usize,
    pub file_fraction: f64,
    pub sentence_fraction: f64,
}

impl ProgressRow {
    fn new(unit: impl Into<String>) -> Self {
        Self {
            unit: unit.into(),
            files_total: 0,
            files_assigned: 0,
            files_completed: 0,
            sentences_total: 0,
            sentences_complete: 0,
            file_fraction: 0.0,
            sentence_fraction: 0.0,
        }
    }

    fn finish(mut self) -> Self {
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        self.file_fraction = frac(self.files_completed, self.files_total);
        self.sentence_fraction = frac(self.sentences_complete, self.sentences_total);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub scope: ProgressScope,
    pub rows: Vec<ProgressRow>,
    /// Completed assignments per annotator.
    pub per_annotator: Vec<(UserId, usize)>,
    /// Filled for the time-log scope only.
    pub sessions: Vec<SessionRecord>,
    /// Users with an open session; master admins only.
    pub online: Vec<UserId>,
}

impl Project {
    /// Work done against work to do. Project and language scopes are open to
    /// everyone (admins and annotators see their own language only); user
    /// and time-log scopes belong to the master admin.
    pub fn progress(&self, actor: &UserId, scope: ProgressScope) -> Result<ProgressReport, AdminError> {
        let op = match scope {
            ProgressScope::Project | ProgressScope::Language => Operation::ViewProgress,
            ProgressScope::User => Operation::ViewUserProgress,
            ProgressScope::TimeLog => Operation::ViewTimeLog,
        };
        let acct = self.require_op(actor, op, None)?;
        let visible = |lang: &crate::corpus::LanguageCode| acct.role.language().is_none_or(|own| own == lang);

        let mut rows: BTreeMap<String, ProgressRow> = BTreeMap::new();
        if scope == ProgressScope::Project {
            rows.insert("project".into(), ProgressRow::new("project"));
        }
        if scope == ProgressScope::Language {
            for l in self.config.languages.iter().filter(|l| visible(l)) {
                rows.insert(l.to_string(), ProgressRow::new(l.to_string()));
            }
        }
        if scope == ProgressScope::User {
            for u in self.users.values().filter(|u| matches!(u.role, super::Role::Annotator(_))) {
                rows.insert(u.user_id.to_string(), ProgressRow::new(u.user_id.to_string()));
            }
        }

        if scope != ProgressScope::TimeLog {
            for f in self.files.values().filter(|f| visible(&f.file.language)) {
                let latest = self.latest_assignment(&f.file_id);
                let unit = match scope {
                    ProgressScope::Project => "project".to_string(),
                    ProgressScope::Language => f.file.language.to_string(),
                    _ => match latest {
                        Some(a) => a.assignee.to_string(),
                        None => continue,
                    },
                };
                let Some(row) = rows.get_mut(&unit) else { continue };
                let c = completion_status(&f.file);
                row.files_total += 1;
                row.sentences_total += c.total;
                row.sentences_complete += c.complete;
                match latest.map(|a| a.state) {
                    Some(s) if s.is_active() => row.files_assigned += 1,
                    Some(AssignmentState::Completed) => row.files_completed += 1,
                    _ => {}
                }
            }
        }

        let mut per_annotator: BTreeMap<UserId, usize> = BTreeMap::new();
        for a in &self.assignments {
            let lang = self.files.get(&a.file_id).map(|f| &f.file.language);
            if a.state == AssignmentState::Completed && lang.is_some_and(visible) {
                *per_annotator.entry(a.assignee.clone()).or_default() += 1;
            }
        }

        let master = acct.role.is_master();
        let online = if master {
            let mut v: Vec<UserId> = self.open_sessions.values().map(|&i| self.sessions[i].user_id.clone()).collect();
            v.sort();
            v.dedup();
            v
        } else {
            Vec::new()
        };
        let sessions = if scope == ProgressScope::TimeLog { self.sessions.clone() } else { Vec::new() };

        Ok(ProgressReport {
            scope,
            rows: rows.into_values().map(ProgressRow::finish).collect(),
            per_annotator: per_annotator.into_iter().collect(),
            sessions,
            online,
        })
    }
}
