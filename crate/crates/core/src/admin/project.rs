use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    allowed, token_hash, AdminError, AssignmentEvent, AssignmentId, AssignmentState, Audience, Command, Credential,
    Event, EventRecord, FileAssignment, FileId, HistoryEntry, Notice, Operation, ProjectConfig, Role, SessionRecord,
    UserAccount, UserId, UserSummary,
};
use crate::annotation::{
    assign_tag, auto_tag, completion_status, edit_sentence, ClosedClassLexicon, Completion, EditRecord, LexiconChange,
};
use crate::corpus::{corpus_stats, serialize_annotated_file, CorpusFile, CorpusStats, LanguageCode, SentenceId};
use crate::qa::{diff_annotations, AgreementRow, AnnotationVersion, Disagreement};
use crate::translate::{rough_translate, BilingualDictionary, GlossToken};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredFile {
    pub file_id: FileId,
    pub file: CorpusFile,
    pub uploaded_by: UserId,
    pub uploaded_at: DateTime<Utc>,
}

/// What a caller sees of one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileView {
    pub file_id: FileId,
    pub language: LanguageCode,
    pub completion: Completion,
    pub stats: CorpusStats,
    pub assignment: Option<FileAssignment>,
    pub file: CorpusFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconDelta {
    pub language: LanguageCode,
    pub version: u64,
    pub changes: Vec<LexiconChange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceGloss {
    pub id: SentenceId,
    pub tokens: Vec<GlossToken>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub row: AgreementRow,
    pub disagreements: Vec<Disagreement>,
}

/// A decided, not yet applied, mutation. `token` carries a freshly issued
/// session token for logins; only its hash is recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub record: EventRecord,
    pub token: Option<String>,
}

/// The complete state of one annotation project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub(crate) seq: u64,
    pub(crate) config: ProjectConfig,
    pub(crate) users: BTreeMap<UserId, UserAccount>,
    pub(crate) sessions: Vec<SessionRecord>,
    /// Token hash → index into `sessions`.
    pub(crate) open_sessions: BTreeMap<String, usize>,
    pub(crate) files: BTreeMap<FileId, StoredFile>,
    pub(crate) uploads: u64,
    pub(crate) assignments: Vec<FileAssignment>,
    pub(crate) lexicons: BTreeMap<LanguageCode, ClosedClassLexicon>,
    pub(crate) edits: Vec<(FileId, EditRecord)>,
    pub(crate) notices: Vec<Notice>,
    pub(crate) dictionaries: BTreeMap<String, BilingualDictionary>,
}

impl Project {
    /// Builds the first record of a new project, which registers `master`
    /// as its master admin.
    pub fn genesis(
        config: ProjectConfig,
        master: UserId,
        display_name: &str,
        password: &str,
        at: DateTime<Utc>,
        rng: &mut dyn RngCore,
    ) -> Result<EventRecord, AdminError> {
        if config.max_active_assignments == 0 {
            return Err(AdminError::ValidationFailed("max active assignments must be at least 1".into()));
        }
        if password.is_empty() {
            return Err(AdminError::ValidationFailed("password must not be empty".into()));
        }
        UserId::parse(master.as_str())?;
        let account = UserAccount {
            user_id: master.clone(),
            display_name: display_name.to_string(),
            role: Role::MasterAdmin,
            active: true,
            credential: Credential::new(password, rng),
        };
        let event = Event::ProjectCreated { config, master: account };
        Ok(EventRecord { seq: 1, entity: event.entity(), actor: Some(master), at, event })
    }

    pub fn from_genesis(record: &EventRecord) -> Result<Self, AdminError> {
        let Event::ProjectCreated { config, master } = &record.event else {
            return Err(AdminError::ValidationFailed("log does not start with project creation".into()));
        };
        let lexicons = config.languages.iter().map(|l| (l.clone(), ClosedClassLexicon::new(l.clone()))).collect();
        Ok(Self {
            seq: record.seq,
            config: config.clone(),
            users: BTreeMap::from([(master.user_id.clone(), master.clone())]),
            sessions: Vec::new(),
            open_sessions: BTreeMap::new(),
            files: BTreeMap::new(),
            uploads: 0,
            assignments: Vec::new(),
            lexicons,
            edits: Vec::new(),
            notices: Vec::new(),
            dictionaries: BTreeMap::new(),
        })
    }

    /// Sequence number of the last applied record.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    pub fn user(&self, id: &UserId) -> Option<&UserAccount> {
        self.users.get(id)
    }

    pub fn users(&self) -> impl Iterator<Item = &UserAccount> {
        self.users.values()
    }

    pub fn sessions(&self) -> &[SessionRecord] {
        &self.sessions
    }

    pub fn files(&self) -> impl Iterator<Item = &StoredFile> {
        self.files.values()
    }

    pub fn file(&self, id: &FileId) -> Option<&StoredFile> {
        self.files.get(id)
    }

    pub fn assignments(&self) -> &[FileAssignment] {
        &self.assignments
    }

    pub fn assignment(&self, id: AssignmentId) -> Option<&FileAssignment> {
        self.assignments.get(usize::try_from(id).ok()?.checked_sub(1)?)
    }

    pub fn active_assignment(&self, file: &FileId) -> Option<&FileAssignment> {
        self.assignments.iter().rev().find(|a| &a.file_id == file && a.state.is_active())
    }

    pub fn latest_assignment(&self, file: &FileId) -> Option<&FileAssignment> {
        self.assignments.iter().rev().find(|a| &a.file_id == file)
    }

    /// Unfinished (Assigned or InProgress) files held by `user`.
    pub fn active_count(&self, user: &UserId) -> usize {
        self.assignments.iter().filter(|a| &a.assignee == user && a.state.is_active()).count()
    }

    pub fn lexicon(&self, language: &LanguageCode) -> Option<&ClosedClassLexicon> {
        self.lexicons.get(language)
    }

    pub fn lexicons(&self) -> impl Iterator<Item = &ClosedClassLexicon> {
        self.lexicons.values()
    }

    pub fn edits(&self) -> &[(FileId, EditRecord)] {
        &self.edits
    }

    pub fn dictionaries(&self) -> impl Iterator<Item = &BilingualDictionary> {
        self.dictionaries.values()
    }

    /// Resolves a session token to its user.
    pub fn authenticate(&self, token: &str) -> Result<&UserId, AdminError> {
        let idx = self.open_sessions.get(&token_hash(token)).ok_or(AdminError::Unauthenticated)?;
        Ok(&self.sessions[*idx].user_id)
    }

    fn account(&self, actor: Option<&UserId>) -> Result<&UserAccount, AdminError> {
        let acct = actor.and_then(|a| self.users.get(a)).ok_or(AdminError::Unauthenticated)?;
        if !acct.active {
            return Err(AdminError::InactiveAccount(acct.user_id.clone()));
        }
        Ok(acct)
    }

    /// Checks the role matrix, telling a wrong-language request apart from
    /// an operation the role never has.
    fn require(&self, acct: &UserAccount, op: Operation, target: Option<&LanguageCode>) -> Result<(), AdminError> {
        if allowed(&acct.role, op, target) {
            return Ok(());
        }
        match (acct.role.language(), target) {
            (Some(own), Some(target)) if allowed(&acct.role, op, Some(own)) => Err(AdminError::LanguageMismatch {
                what: format!("{op:?}"),
                expected: target.clone(),
                actual: own.clone(),
            }),
            _ => Err(AdminError::NotAuthorized(format!("{} may not {op:?}", acct.role))),
        }
    }

    fn stored(&self, id: &FileId) -> Result<&StoredFile, AdminError> {
        self.files.get(id).ok_or_else(|| AdminError::UnknownFile(id.clone()))
    }

    fn known_language(&self, language: &LanguageCode) -> Result<(), AdminError> {
        if self.config.languages.contains(language) {
            Ok(())
        } else {
            Err(AdminError::UnknownLanguage(language.clone()))
        }
    }

    fn check_role(&self, role: &Role) -> Result<(), AdminError> {
        role.language().map_or(Ok(()), |l| self.known_language(l))
    }

    /// An active annotator of `language` with room under the cap.
    fn check_assignee(&self, assignee: &UserId, language: &LanguageCode) -> Result<(), AdminError> {
        let acct = self.users.get(assignee).ok_or_else(|| AdminError::UnknownUser(assignee.clone()))?;
        match &acct.role {
            Role::Annotator(_) if !acct.active => return Err(AdminError::InvalidAssignee(assignee.clone())),
            Role::Annotator(l) if l != language => {
                return Err(AdminError::LanguageMismatch {
                    what: "file".into(),
                    expected: language.clone(),
                    actual: l.clone(),
                })
            }
            Role::Annotator(_) => {}
            _ => return Err(AdminError::InvalidAssignee(assignee.clone())),
        }
        let active = self.active_count(assignee);
        let limit = self.config.max_active_assignments;
        if active >= limit {
            return Err(AdminError::CapExceeded { assignee: assignee.clone(), active, limit });
        }
        Ok(())
    }

    /// The annotator must hold the file's active assignment.
    fn check_annotator(&self, acct: &UserAccount, file: &StoredFile) -> Result<(), AdminError> {
        self.require(acct, Operation::Annotate, Some(&file.file.language))?;
        match self.active_assignment(&file.file_id) {
            Some(a) if a.assignee == acct.user_id => Ok(()),
            _ => Err(AdminError::NotAuthorized(format!("file {} is not assigned to {}", file.file_id, acct.user_id))),
        }
    }

    fn sentence<'a>(
        &self,
        file: &'a StoredFile,
        id: &SentenceId,
    ) -> Result<&'a crate::corpus::AnnotatedSentence, AdminError> {
        file.file.sentence(id).ok_or_else(|| AdminError::UnknownSentence { file: file.file_id.clone(), id: id.clone() })
    }

    /// Validates `command` for `actor` and produces the record to apply.
    pub fn decide(
        &self,
        actor: Option<&UserId>,
        command: Command,
        at: DateTime<Utc>,
        rng: &mut dyn RngCore,
    ) -> Result<Decision, AdminError> {
        let mut token = None;
        let mut recorded_actor = actor.cloned();
        let event = match command {
            Command::CreateUser { user_id, display_name, role, password } => {
                match actor {
                    None => {
                        if !self.config.open_registration || !matches!(role, Role::Annotator(_)) {
                            return Err(AdminError::NotAuthorized("self-registration is limited to annotators".into()));
                        }
                        recorded_actor = Some(user_id.clone());
                    }
                    Some(_) => {
                        let acct = self.account(actor)?;
                        self.require(acct, Operation::CreateUser, None)?;
                    }
                }
                let user_id = UserId::parse(user_id.as_str())?;
                if self.users.contains_key(&user_id) {
                    return Err(AdminError::DuplicateUser(user_id));
                }
                self.check_role(&role)?;
                if password.is_empty() {
                    return Err(AdminError::ValidationFailed("password must not be empty".into()));
                }
                let credential = Credential::new(&password, rng);
                Event::UserCreated { account: UserAccount { user_id, display_name, role, active: true, credential } }
            }
            Command::ModifyUser { user_id, display_name, role, password, active } => {
                let acct = self.account(actor)?;
                self.require(acct, Operation::ModifyUser, None)?;
                if !self.users.contains_key(&user_id) {
                    return Err(AdminError::UnknownUser(user_id));
                }
                if user_id == acct.user_id && (role.as_ref().is_some_and(|r| !r.is_master()) || active == Some(false)) {
                    return Err(AdminError::NotAuthorized("cannot demote or deactivate yourself".into()));
                }
                if let Some(r) = &role {
                    self.check_role(r)?;
                }
                let credential = match password {
                    Some(p) if p.is_empty() => {
                        return Err(AdminError::ValidationFailed("password must not be empty".into()))
                    }
                    Some(p) => Some(Credential::new(&p, rng)),
                    None => None,
                };
                Event::UserModified { user_id, display_name, role, credential, active }
            }
            Command::DeleteUser { user_id } => {
                let acct = self.account(actor)?;
                self.require(acct, Operation::DeleteUser, None)?;
                if !self.users.contains_key(&user_id) {
                    return Err(AdminError::UnknownUser(user_id));
                }
                if user_id == acct.user_id {
                    return Err(AdminError::NotAuthorized("cannot delete yourself".into()));
                }
                Event::UserDeactivated { user_id }
            }
            Command::Login { user_id, password } => {
                let acct = self.users.get(&user_id).ok_or(AdminError::BadCredential)?;
                if !acct.credential.verify(&password) {
                    return Err(AdminError::BadCredential);
                }
                if !acct.active {
                    return Err(AdminError::InactiveAccount(user_id));
                }
                let mut raw = [0u8; 32];
                rng.fill_bytes(&mut raw);
                let t = hex::encode(raw);
                let token_hash = token_hash(&t);
                token = Some(t);
                recorded_actor = Some(user_id.clone());
                Event::LoggedIn { user_id, token_hash }
            }
            Command::Logout { token: t } => {
                let user = self.authenticate(&t)?;
                recorded_actor = Some(user.clone());
                Event::LoggedOut { token_hash: token_hash(&t) }
            }
            Command::UploadFile { file } => {
                let acct = self.account(actor)?;
                self.require(acct, Operation::UploadFile, None)?;
                self.known_language(&file.language)?;
                if file.sentences.is_empty() {
                    return Err(AdminError::ValidationFailed("file has no sentences".into()));
                }
                file.validate(Some(&self.config.tagset)).map_err(|e| AdminError::ValidationFailed(e.to_string()))?;
                Event::FileUploaded { file_id: FileId::new(format!("F{}", self.uploads + 1)), file }
            }
            Command::AssignFile { file_id, assignee } => {
                let acct = self.account(actor)?;
                let stored = self.stored(&file_id)?;
                self.require(acct, Operation::AssignFile, Some(&stored.file.language))?;
                if let Some(a) = self.active_assignment(&file_id) {
                    return Err(AdminError::AlreadyAssigned { file: file_id, assignee: a.assignee.clone() });
                }
                self.check_assignee(&assignee, &stored.file.language)?;
                Event::FileAssigned { assignment: self.assignments.len() as u64 + 1, file_id, assignee }
            }
            Command::ReassignFile { file_id, assignee } => {
                let acct = self.account(actor)?;
                let stored = self.stored(&file_id)?;
                self.require(acct, Operation::ReassignFile, Some(&stored.file.language))?;
                let current =
                    self.active_assignment(&file_id).ok_or_else(|| AdminError::NoActiveAssignment(file_id.clone()))?;
                if current.assignee == assignee {
                    return Err(AdminError::AlreadyAssigned { file: file_id, assignee });
                }
                self.check_assignee(&assignee, &stored.file.language)?;
                Event::FileReassigned {
                    previous: current.id,
                    assignment: self.assignments.len() as u64 + 1,
                    file_id,
                    assignee,
                }
            }
            Command::CompleteFile { file_id } => {
                let acct = self.account(actor)?;
                let stored = self.stored(&file_id)?;
                let current = self.active_assignment(&file_id);
                let is_assignee = current.is_some_and(|a| a.assignee == acct.user_id);
                if !is_assignee {
                    if matches!(acct.role, Role::Annotator(_)) {
                        return Err(AdminError::NotAuthorized("only the assignee may complete a file".into()));
                    }
                    self.require(acct, Operation::CompleteFile, Some(&stored.file.language))?;
                }
                let current = current.ok_or_else(|| AdminError::NoActiveAssignment(file_id.clone()))?;
                let c = completion_status(&stored.file);
                if !c.is_complete() {
                    return Err(AdminError::IncompleteFile { file: file_id, remaining: c.remaining() });
                }
                Event::AssignmentCompleted { assignment: current.id }
            }
            Command::AssignTag { file_id, sentence, index, tag } => {
                let acct = self.account(actor)?;
                let stored = self.stored(&file_id)?;
                self.check_annotator(acct, stored)?;
                let s = self.sentence(stored, &sentence)?;
                assign_tag(s, index, &tag, &self.config.tagset)?;
                Event::TagAssigned { file_id, sentence, index, tag }
            }
            Command::EditSentence { file_id, sentence, text } => {
                let acct = self.account(actor)?;
                let stored = self.stored(&file_id)?;
                self.check_annotator(acct, stored)?;
                let s = self.sentence(stored, &sentence)?;
                let (edited, record) = edit_sentence(s, &text, &acct.user_id, at)?;
                Event::SentenceEdited { file_id, sentence: edited, record }
            }
            Command::AutoTag { file_id } => {
                let acct = self.account(actor)?;
                let stored = self.stored(&file_id)?;
                self.check_annotator(acct, stored)?;
                let lexicon = self
                    .lexicons
                    .get(&stored.file.language)
                    .ok_or_else(|| AdminError::UnknownLanguage(stored.file.language.clone()))?;
                let mut applied = Vec::new();
                for s in &stored.file.sentences {
                    let (tagged, n) = auto_tag(s, lexicon);
                    if n == 0 {
                        continue;
                    }
                    for (i, (before, after)) in s.tokens.iter().zip(&tagged.tokens).enumerate() {
                        if before.tag.is_none() {
                            if let Some(t) = &after.tag {
                                applied.push((s.id.clone(), i, t.clone()));
                            }
                        }
                    }
                }
                Event::AutoTagged { file_id, applied }
            }
            Command::UpdateLexicon { language, edit } => {
                let acct = self.account(actor)?;
                self.known_language(&language)?;
                self.require(acct, Operation::UpdateLexicon, Some(&language))?;
                ClosedClassLexicon::check_edit(&edit, &self.config.tagset)?;
                Event::LexiconUpdated { language, edit }
            }
            Command::PostNotice { audience, body } => {
                let acct = self.account(actor)?;
                self.require(acct, Operation::PostNotice, None)?;
                if let Audience::Language(l) = &audience {
                    self.known_language(l)?;
                }
                if body.trim().is_empty() {
                    return Err(AdminError::ValidationFailed("notice body is empty".into()));
                }
                Event::NoticePosted { notice_id: self.notices.len() as u64 + 1, audience, body }
            }
            Command::LoadDictionary { dictionary } => {
                let acct = self.account(actor)?;
                self.require(acct, Operation::LoadDictionary, None)?;
                self.known_language(&dictionary.source)?;
                Event::DictionaryLoaded { dictionary }
            }
        };
        let record = EventRecord { seq: self.seq + 1, entity: event.entity(), actor: recorded_actor, at, event };
        Ok(Decision { record, token })
    }

    /// Decides and applies in one step.
    pub fn execute(
        &mut self,
        actor: Option<&UserId>,
        command: Command,
        at: DateTime<Utc>,
        rng: &mut dyn RngCore,
    ) -> Result<Decision, AdminError> {
        let decision = self.decide(actor, command, at, rng)?;
        self.apply(&decision.record);
        Ok(decision)
    }

    fn mark_started(&mut self, file: &FileId, actor: &Option<UserId>, at: DateTime<Utc>) {
        if let Some(a) =
            self.assignments.iter_mut().rev().find(|a| &a.file_id == file && a.state == AssignmentState::Assigned)
        {
            a.state = AssignmentState::InProgress;
            a.history.push(HistoryEntry { event: AssignmentEvent::Started, actor: actor_or_system(actor), at });
        }
    }

    fn assignment_mut(&mut self, id: AssignmentId) -> Option<&mut FileAssignment> {
        self.assignments.get_mut(usize::try_from(id).ok()?.checked_sub(1)?)
    }

    /// Applies a record produced by [`Project::decide`] on this state (or
    /// read back from this project's log).
    pub fn apply(&mut self, record: &EventRecord) {
        let at = record.at;
        let actor = &record.actor;
        match &record.event {
            Event::ProjectCreated { .. } => {}
            Event::UserCreated { account } => {
                self.users.insert(account.user_id.clone(), account.clone());
            }
            Event::UserModified { user_id, display_name, role, credential, active } => {
                if let Some(u) = self.users.get_mut(user_id) {
                    if let Some(d) = display_name {
                        u.display_name = d.clone();
                    }
                    if let Some(r) = role {
                        u.role = r.clone();
                    }
                    if let Some(c) = credential {
                        u.credential = c.clone();
                    }
                    if let Some(a) = active {
                        u.active = *a;
                    }
                }
                if *active == Some(false) {
                    self.close_sessions_of(user_id, at);
                }
            }
            Event::UserDeactivated { user_id } => {
                if let Some(u) = self.users.get_mut(user_id) {
                    u.active = false;
                }
                self.close_sessions_of(user_id, at);
            }
            Event::LoggedIn { user_id, token_hash } => {
                self.sessions.push(SessionRecord { user_id: user_id.clone(), login_at: at, logout_at: None });
                self.open_sessions.insert(token_hash.clone(), self.sessions.len() - 1);
            }
            Event::LoggedOut { token_hash } => {
                if let Some(i) = self.open_sessions.remove(token_hash) {
                    self.sessions[i].logout_at = Some(at);
                }
            }
            Event::FileUploaded { file_id, file } => {
                self.uploads += 1;
                self.files.insert(
                    file_id.clone(),
                    StoredFile {
                        file_id: file_id.clone(),
                        file: file.clone(),
                        uploaded_by: actor_or_system(actor),
                        uploaded_at: at,
                    },
                );
            }
            Event::FileAssigned { assignment, file_id, assignee } => {
                self.assignments.push(FileAssignment {
                    id: *assignment,
                    file_id: file_id.clone(),
                    assignee: assignee.clone(),
                    state: AssignmentState::Assigned,
                    history: vec![HistoryEntry {
                        event: AssignmentEvent::Assigned { assignee: assignee.clone() },
                        actor: actor_or_system(actor),
                        at,
                    }],
                });
            }
            Event::FileReassigned { previous, assignment, file_id, assignee } => {
                if let Some(prev) = self.assignment_mut(*previous) {
                    prev.state = AssignmentState::Reassigned;
                    prev.history.push(HistoryEntry {
                        event: AssignmentEvent::Reassigned { to: assignee.clone() },
                        actor: actor_or_system(actor),
                        at,
                    });
                }
                self.assignments.push(FileAssignment {
                    id: *assignment,
                    file_id: file_id.clone(),
                    assignee: assignee.clone(),
                    state: AssignmentState::Assigned,
                    history: vec![HistoryEntry {
                        event: AssignmentEvent::Assigned { assignee: assignee.clone() },
                        actor: actor_or_system(actor),
                        at,
                    }],
                });
            }
            Event::AssignmentCompleted { assignment } => {
                let who = actor_or_system(actor);
                if let Some(a) = self.assignment_mut(*assignment) {
                    a.state = AssignmentState::Completed;
                    a.history.push(HistoryEntry { event: AssignmentEvent::Completed, actor: who, at });
                }
            }
            Event::TagAssigned { file_id, sentence, index, tag } => {
                if let Some(t) = self
                    .files
                    .get_mut(file_id)
                    .and_then(|f| f.file.sentence_mut(sentence))
                    .and_then(|s| s.tokens.get_mut(*index))
                {
                    t.tag = Some(tag.clone());
                }
                self.mark_started(file_id, actor, at);
            }
            Event::SentenceEdited { file_id, sentence, record: edit } => {
                if let Some(s) = self.files.get_mut(file_id).and_then(|f| f.file.sentence_mut(&sentence.id)) {
                    *s = sentence.clone();
                }
                self.edits.push((file_id.clone(), edit.clone()));
                self.mark_started(file_id, actor, at);
            }
            Event::AutoTagged { file_id, applied } => {
                if let Some(f) = self.files.get_mut(file_id) {
                    for (sid, index, tag) in applied {
                        if let Some(t) = f.file.sentence_mut(sid).and_then(|s| s.tokens.get_mut(*index)) {
                            t.tag = Some(tag.clone());
                        }
                    }
                }
                if !applied.is_empty() {
                    self.mark_started(file_id, actor, at);
                }
            }
            Event::LexiconUpdated { language, edit } => {
                let tagset = &self.config.tagset;
                if let Some(lex) = self.lexicons.get_mut(language) {
                    let applied = lex.apply(edit.clone(), tagset);
                    debug_assert!(applied.is_ok(), "lexicon edit was validated when decided");
                }
            }
            Event::NoticePosted { notice_id, audience, body } => {
                self.notices.push(Notice {
                    notice_id: *notice_id,
                    author: actor_or_system(actor),
                    audience: audience.clone(),
                    body: body.clone(),
                    posted_at: at,
                });
            }
            Event::DictionaryLoaded { dictionary } => {
                self.dictionaries.insert(dictionary.pair_key(), dictionary.clone());
            }
        }
        self.seq = record.seq;
    }

    fn close_sessions_of(&mut self, user: &UserId, at: DateTime<Utc>) {
        let sessions = &mut self.sessions;
        self.open_sessions.retain(|_, i| {
            if &sessions[*i].user_id == user {
                sessions[*i].logout_at = Some(at);
                false
            } else {
                true
            }
        });
    }

    // ---- queries ----

    pub fn list_users(&self, actor: &UserId) -> Result<Vec<UserSummary>, AdminError> {
        let acct = self.account(Some(actor))?;
        self.require(acct, Operation::ListUsers, None)?;
        let lang = acct.role.language();
        Ok(self.users.values().filter(|u| lang.is_none() || u.role.language() == lang).map(UserSummary::from).collect())
    }

    /// Files the actor may open, in id order.
    pub fn list_files(&self, actor: &UserId) -> Result<Vec<FileView>, AdminError> {
        let acct = self.account(Some(actor))?;
        Ok(self
            .files
            .values()
            .filter(|f| allowed(&acct.role, Operation::ViewFile, Some(&f.file.language)))
            .map(|f| self.view(f))
            .collect())
    }

    fn view(&self, f: &StoredFile) -> FileView {
        FileView {
            file_id: f.file_id.clone(),
            language: f.file.language.clone(),
            completion: completion_status(&f.file),
            stats: corpus_stats(&f.file),
            assignment: self.latest_assignment(&f.file_id).cloned(),
            file: f.file.clone(),
        }
    }

    pub fn file_view(&self, actor: &UserId, file_id: &FileId) -> Result<FileView, AdminError> {
        let acct = self.account(Some(actor))?;
        let stored = self.stored(file_id)?;
        self.require(acct, Operation::ViewFile, Some(&stored.file.language))?;
        Ok(self.view(stored))
    }

    /// The annotated file, released only once every sentence is fully tagged.
    pub fn download(&self, actor: &UserId, file_id: &FileId) -> Result<Vec<u8>, AdminError> {
        let acct = self.account(Some(actor))?;
        let stored = self.stored(file_id)?;
        self.require(acct, Operation::DownloadFile, Some(&stored.file.language))?;
        let c = completion_status(&stored.file);
        if c.total == 0 || !c.is_complete() {
            return Err(AdminError::IncompleteFile { file: file_id.clone(), remaining: c.remaining() });
        }
        Ok(serialize_annotated_file(&stored.file))
    }

    /// Lexicon changes after `since`; `since = 0` returns the whole lexicon.
    pub fn lexicon_sync(
        &self,
        actor: &UserId,
        language: &LanguageCode,
        since: u64,
    ) -> Result<LexiconDelta, AdminError> {
        let acct = self.account(Some(actor))?;
        let lexicon = self.lexicons.get(language).ok_or_else(|| AdminError::UnknownLanguage(language.clone()))?;
        self.require(acct, Operation::ReadLexicon, Some(language))?;
        Ok(LexiconDelta { language: language.clone(), version: lexicon.version, changes: lexicon.delta_since(since) })
    }

    /// Notices addressed to the actor, newest first.
    pub fn list_notices(&self, actor: &UserId) -> Result<Vec<Notice>, AdminError> {
        let acct = self.account(Some(actor))?;
        self.require(acct, Operation::ListNotices, None)?;
        Ok(self
            .notices
            .iter()
            .rev()
            .filter(|n| match (&n.audience, acct.role.language()) {
                (Audience::All, _) | (_, None) => true,
                (Audience::Language(l), Some(own)) => l == own,
            })
            .cloned()
            .collect())
    }

    pub fn gloss(&self, actor: &UserId, file_id: &FileId, pair: &str) -> Result<Vec<SentenceGloss>, AdminError> {
        let acct = self.account(Some(actor))?;
        let stored = self.stored(file_id)?;
        self.require(acct, Operation::Translate, Some(&stored.file.language))?;
        let dict = self.dictionaries.get(pair).ok_or_else(|| AdminError::UnknownDictionary(pair.to_string()))?;
        stored
            .file
            .sentences
            .iter()
            .map(|s| Ok(SentenceGloss { id: s.id.clone(), tokens: rough_translate(s, &stored.file.language, dict)? }))
            .collect()
    }

    /// The annotator credited with a file: its latest assignee, or the uploader.
    fn annotator_of(&self, f: &StoredFile) -> UserId {
        self.latest_assignment(&f.file_id).map(|a| a.assignee.clone()).unwrap_or_else(|| f.uploaded_by.clone())
    }

    /// Agreement between two files holding the same text.
    pub fn agreement(&self, actor: &UserId, a: &FileId, b: &FileId) -> Result<AgreementReport, AdminError> {
        let acct = self.account(Some(actor))?;
        let (fa, fb) = (self.stored(a)?, self.stored(b)?);
        self.require(acct, Operation::ViewAgreement, Some(&fa.file.language))?;
        self.require(acct, Operation::ViewAgreement, Some(&fb.file.language))?;
        let va = AnnotationVersion { file_id: a.to_string(), annotator: self.annotator_of(fa), file: fa.file.clone() };
        let vb = AnnotationVersion { file_id: b.to_string(), annotator: self.annotator_of(fb), file: fb.file.clone() };
        let disagreements = diff_annotations(&va, &vb)?;
        let row = AgreementRow::compute(format!("{a}+{b}"), &va, &vb)?;
        Ok(AgreementReport { row, disagreements })
    }

    pub(crate) fn require_op(
        &self,
        actor: &UserId,
        op: Operation,
        target: Option<&LanguageCode>,
    ) -> Result<&UserAccount, AdminError> {
        let acct = self.account(Some(actor))?;
        self.require(acct, op, target)?;
        Ok(acct)
    }
}

fn actor_or_system(actor: &Option<UserId>) -> UserId {
    actor.clone().unwrap_or_else(|| UserId::new("system"))
}
