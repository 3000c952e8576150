use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{AssignmentId, Audience, Credential, FileId, NoticeId, ProjectConfig, Role, UserAccount, UserId};
use crate::annotation::{EditRecord, LexiconEdit};
use crate::corpus::{AnnotatedSentence, CorpusFile, LanguageCode, SentenceId};
use crate::translate::BilingualDictionary;

/// A request to change project state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    CreateUser {
        user_id: UserId,
        display_name: String,
        role: Role,
        password: String,
    },
    ModifyUser {
        user_id: UserId,
        display_name: Option<String>,
        role: Option<Role>,
        password: Option<String>,
        active: Option<bool>,
    },
    DeleteUser {
        user_id: UserId,
    },
    Login {
        user_id: UserId,
        password: String,
    },
    Logout {
        token: String,
    },
    UploadFile {
        file: CorpusFile,
    },
    AssignFile {
        file_id: FileId,
        assignee: UserId,
    },
    ReassignFile {
        file_id: FileId,
        assignee: UserId,
    },
    CompleteFile {
        file_id: FileId,
    },
    AssignTag {
        file_id: FileId,
        sentence: SentenceId,
        index: usize,
        tag: String,
    },
    EditSentence {
        file_id: FileId,
        sentence: SentenceId,
        text: String,
    },
    AutoTag {
        file_id: FileId,
    },
    UpdateLexicon {
        language: LanguageCode,
        edit: LexiconEdit,
    },
    PostNotice {
        audience: Audience,
        body: String,
    },
    LoadDictionary {
        dictionary: BilingualDictionary,
    },
}

/// A state transition that has been validated and may be applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ProjectCreated {
        config: ProjectConfig,
        master: UserAccount,
    },
    UserCreated {
        account: UserAccount,
    },
    UserModified {
        user_id: UserId,
        display_name: Option<String>,
        role: Option<Role>,
        credential: Option<Credential>,
        active: Option<bool>,
    },
    UserDeactivated {
        user_id: UserId,
    },
    LoggedIn {
        user_id: UserId,
        token_hash: String,
    },
    LoggedOut {
        token_hash: String,
    },
    FileUploaded {
        file_id: FileId,
        file: CorpusFile,
    },
    FileAssigned {
        assignment: AssignmentId,
        file_id: FileId,
        assignee: UserId,
    },
    FileReassigned {
        previous: AssignmentId,
        assignment: AssignmentId,
        file_id: FileId,
        assignee: UserId,
    },
    AssignmentCompleted {
        assignment: AssignmentId,
    },
    TagAssigned {
        file_id: FileId,
        sentence: SentenceId,
        index: usize,
        tag: String,
    },
    SentenceEdited {
        file_id: FileId,
        sentence: AnnotatedSentence,
        record: EditRecord,
    },
    AutoTagged {
        file_id: FileId,
        applied: Vec<(SentenceId, usize, String)>,
    },
    LexiconUpdated {
        language: LanguageCode,
        edit: LexiconEdit,
    },
    NoticePosted {
        notice_id: NoticeId,
        audience: Audience,
        body: String,
    },
    DictionaryLoaded {
        dictionary: BilingualDictionary,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    pub kind: String,
    pub id: String,
}

impl EntityRef {
    pub fn new(kind: &str, id: impl ToString) -> Self {
        Self { kind: kind.to_string(), id: id.to_string() }
    }
}

impl Event {
    /// The entity whose state this event changes.
    pub fn entity(&self) -> EntityRef {
        match self {
            Event::ProjectCreated { .. } => EntityRef::new("project", "project"),
            Event::UserCreated { account } => EntityRef::new("user", &account.user_id),
            Event::UserModified { user_id, .. } | Event::UserDeactivated { user_id } => EntityRef::new("user", user_id),
            Event::LoggedIn { token_hash, .. } | Event::LoggedOut { token_hash } => {
                EntityRef::new("session", &token_hash[..16])
            }
            Event::FileUploaded { file_id, .. }
            | Event::TagAssigned { file_id, .. }
            | Event::SentenceEdited { file_id, .. }
            | Event::AutoTagged { file_id, .. } => EntityRef::new("file", file_id),
            Event::FileAssigned { assignment, .. }
            | Event::FileReassigned { assignment, .. }
            | Event::AssignmentCompleted { assignment } => EntityRef::new("assignment", assignment),
            Event::LexiconUpdated { language, .. } => EntityRef::new("lexicon", language),
            Event::NoticePosted { notice_id, .. } => EntityRef::new("notice", notice_id),
            Event::DictionaryLoaded { dictionary } => EntityRef::new("dictionary", dictionary.pair_key()),
        }
    }
}

/// One entry of the append-only project log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub entity: EntityRef,
    pub actor: Option<UserId>,
    pub at: DateTime<Utc>,
    pub event: Event,
}
