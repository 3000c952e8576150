//! Project administration: accounts and roles, sessions, uploads, the file
//! assignment workflow, notices and progress monitoring.
//!
//! [`Project`] is an event-sourced aggregate. Every mutation is first
//! *decided* against the current state, producing an [`EventRecord`], and
//! only then *applied*. Replaying the records of a project in order rebuilds
//! it exactly.

mod authz;
mod event;
mod project;
mod report;

pub use authz::{allowed, Operation};
pub use event::{Command, EntityRef, Event, EventRecord};
pub use project::{AgreementReport, Decision, FileView, LexiconDelta, Project, SentenceGloss, StoredFile};
pub use report::{ProgressReport, ProgressRow, ProgressScope};

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adapt::AdaptError;
use crate::annotation::AnnotationError;
use crate::corpus::{CorpusError, LanguageCode, SentenceId, Tagset};
use crate::qa::QaError;
use crate::translate::TranslateError;

/// Default number of unfinished files one annotator may hold.
pub const DEFAULT_MAX_ACTIVE_ASSIGNMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    /// Login names: 1-64 characters from `[A-Za-z0-9._@-]`.
    pub fn parse(id: &str) -> Result<Self, AdminError> {
        let ok = (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b"._@-".contains(&b));
        if ok {
            Ok(Self(id.to_string()))
        } else {
            Err(AdminError::InvalidUserId(id.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FileId(String);

impl FileId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type AssignmentId = u64;
pub type NoticeId = u64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "language")]
pub enum Role {
    MasterAdmin,
    Admin(LanguageCode),
    Annotator(LanguageCode),
}

impl Role {
    pub fn language(&self) -> Option<&LanguageCode> {
        match self {
            Role::MasterAdmin => None,
            Role::Admin(l) | Role::Annotator(l) => Some(l),
        }
    }

    pub fn is_master(&self) -> bool {
        matches!(self, Role::MasterAdmin)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::MasterAdmin => f.write_str("master-admin"),
            Role::Admin(l) => write!(f, "admin({l})"),
            Role::Annotator(l) => write!(f, "annotator({l})"),
        }
    }
}

/// Salted SHA-256 password verifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    salt: String,
    hash: String,
}

impl Credential {
    pub fn new(password: &str, rng: &mut dyn RngCore) -> Self {
        let mut salt = [0u8; 16];
        rng.fill_bytes(&mut salt);
        let salt = hex::encode(salt);
        let hash = Self::digest(&salt, password);
        Self { salt, hash }
    }

    fn digest(salt: &str, password: &str) -> String {
        let mut h = Sha256::new();
        h.update(salt.as_bytes());
        h.update([0]);
        h.update(password.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn verify(&self, password: &str) -> bool {
        Self::digest(&self.salt, password) == self.hash
    }
}

pub(crate) fn token_hash(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: UserId,
    pub display_name: String,
    pub role: Role,
    pub active: bool,
    pub credential: Credential,
}

/// Account data safe to hand out over the API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user_id: UserId,
    pub display_name: String,
    pub role: Role,
    pub active: bool,
}

impl From<&UserAccount> for UserSummary {
    fn from(a: &UserAccount) -> Self {
        Self {
            user_id: a.user_id.clone(),
            display_name: a.display_name.clone(),
            role: a.role.clone(),
            active: a.active,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub user_id: UserId,
    pub login_at: DateTime<Utc>,
    pub logout_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignmentState {
    Assigned,
    InProgress,
    Completed,
    Reassigned,
}

impl AssignmentState {
    /// Assigned and InProgress count against the annotator's cap.
    pub fn is_active(self) -> bool {
        matches!(self, AssignmentState::Assigned | AssignmentState::InProgress)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AssignmentEvent {
    Assigned { assignee: UserId },
    Started,
    Completed,
    Reassigned { to: UserId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    #[serde(flatten)]
    pub event: AssignmentEvent,
    pub actor: UserId,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileAssignment {
    pub id: AssignmentId,
    pub file_id: FileId,
    pub assignee: UserId,
    pub state: AssignmentState,
    pub history: Vec<HistoryEntry>,
}

impl FileAssignment {
    /// Recomputes the state from the history alone.
    pub fn replayed_state(&self) -> Option<AssignmentState> {
        let mut state = None;
        for h in &self.history {
            state = Some(match (&h.event, state) {
                (AssignmentEvent::Assigned { .. }, None) => AssignmentState::Assigned,
                (AssignmentEvent::Started, Some(AssignmentState::Assigned)) => AssignmentState::InProgress,
                (AssignmentEvent::Completed, Some(s)) if s.is_active() => AssignmentState::Completed,
                (AssignmentEvent::Reassigned { .. }, Some(s)) if s.is_active() => AssignmentState::Reassigned,
                _ => return None,
            });
        }
        state
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub max_active_assignments: usize,
    pub tagset: Tagset,
    pub languages: BTreeSet<LanguageCode>,
    pub open_registration: bool,
}

impl ProjectConfig {
    pub fn new(tagset: Tagset, languages: impl IntoIterator<Item = LanguageCode>) -> Self {
        Self {
            max_active_assignments: DEFAULT_MAX_ACTIVE_ASSIGNMENTS,
            tagset,
            languages: languages.into_iter().collect(),
            open_registration: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Audience {
    All,
    Language(LanguageCode),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    pub notice_id: NoticeId,
    pub author: UserId,
    pub audience: Audience,
    pub body: String,
    pub posted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdminError {
    #[error("authentication required")]
    Unauthenticated,
    #[error("not authorized: {0}")]
    NotAuthorized(String),
    #[error("user {0} already exists")]
    DuplicateUser(UserId),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("invalid user id {0:?}")]
    InvalidUserId(String),
    #[error("bad credential")]
    BadCredential,
    #[error("account {0} is inactive")]
    InactiveAccount(UserId),
    #[error("unknown file {0}")]
    UnknownFile(FileId),
    #[error("file {file} has no sentence {id}")]
    UnknownSentence { file: FileId, id: SentenceId },
    #[error("language {0} is not part of this project")]
    UnknownLanguage(LanguageCode),
    #[error("{what} belongs to {expected}, not {actual}")]
    LanguageMismatch { what: String, expected: LanguageCode, actual: LanguageCode },
    #[error("{assignee} already holds {active} unfinished files (limit {limit})")]
    CapExceeded { assignee: UserId, active: usize, limit: usize },
    #[error("file {file} is already assigned to {assignee}")]
    AlreadyAssigned { file: FileId, assignee: UserId },
    #[error("{0} cannot receive assignments")]
    InvalidAssignee(UserId),
    #[error("file {0} has no active assignment")]
    NoActiveAssignment(FileId),
    #[error("file {file} has {remaining} incompletely tagged sentences")]
    IncompleteFile { file: FileId, remaining: usize },
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("no dictionary for {0}")]
    UnknownDictionary(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Adapt(#[from] AdaptError),
    #[error(transparent)]
    Qa(#[from] QaError),
}

impl AdminError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        use AnnotationError as A;
        match self {
            AdminError::Unauthenticated => "Unauthenticated",
            AdminError::NotAuthorized(_) => "NotAuthorized",
            AdminError::DuplicateUser(_) => "DuplicateUser",
            AdminError::UnknownUser(_) => "UnknownUser",
            AdminError::InvalidUserId(_) => "InvalidUserId",
            AdminError::BadCredential => "BadCredential",
            AdminError::InactiveAccount(_) => "InactiveAccount",
            AdminError::UnknownFile(_) => "UnknownFile",
            AdminError::UnknownSentence { .. } => "UnknownSentence",
            AdminError::UnknownLanguage(_) => "UnknownLanguage",
            AdminError::LanguageMismatch { .. } => "LanguageMismatch",
            AdminError::CapExceeded { .. } => "CapExceeded",
            AdminError::AlreadyAssigned { .. } => "AlreadyAssigned",
            AdminError::InvalidAssignee(_) => "InvalidAssignee",
            AdminError::NoActiveAssignment(_) => "NoActiveAssignment",
            AdminError::IncompleteFile { .. } => "IncompleteFile",
            AdminError::ValidationFailed(_) => "ValidationFailed",
            AdminError::UnknownDictionary(_) => "UnknownDictionary",
            AdminError::Annotation(a) => match a {
                A::TagNotInTagset(_) => "TagNotInTagset",
                A::IndexOutOfRange { .. } => "IndexOutOfRange",
                A::EmptyEdit => "EmptyEdit",
                A::NoChange => "NoChange",
                A::InvalidSurface(_) => "InvalidSurface",
                A::LanguageMismatch { .. } => "LanguageMismatch",
                A::Corpus(_) => "FormatError",
            },
            AdminError::Corpus(_) => "FormatError",
            AdminError::Translate(TranslateError::LanguageMismatch { .. }) => "LanguageMismatch",
            AdminError::Translate(_) => "FormatError",
            AdminError::Adapt(AdaptError::UnmappedTag { .. }) => "UnmappedTag",
            AdminError::Adapt(AdaptError::SerialOverflow(_)) => "SerialOverflow",
            AdminError::Adapt(_) => "FormatError",
            AdminError::Qa(QaError::TextMismatch(_)) => "TextMismatch",
            AdminError::Qa(_) => "NoJointPositions",
        }
    }
}
