//! Transport-independent request routing.
//!
//! An [`ApiRequest`] names a method, a path under `/api`, decoded query
//! parameters, an optional bearer token and a body. [`route`] maps it onto
//! the project and produces an [`ApiResponse`]. The HTTP server and the
//! command-line client's local mode both go through here.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::archive::{export_archive, ExportFormat};
use crate::adapt::{assign_ids, map_foreign_tags, normalize_text, segment_sentences, TagMapping};
use crate::admin::{
    AdminError, Audience, Command, EntityRef, Event, FileId, Operation, ProgressScope, Role, UserId, UserSummary,
};
use crate::annotation::LexiconEdit;
use crate::corpus::{
    parse_annotated_file, parse_raw_file, serialize_annotated_file, serialize_raw_file, CorpusFile, DomainLabel,
    LanguageCode, SentenceId,
};
use crate::qa::agreement_table;
use crate::store::{Engine, StoreError};
use crate::translate::load_dictionary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Get,
    Post,
    Put,
    Patch,
    Delete,
}

impl std::str::FromStr for Method {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "GET" => Method::Get,
            "POST" => Method::Post,
            "PUT" => Method::Put,
            "PATCH" => Method::Patch,
            "DELETE" => Method::Delete,
            _ => return Err(()),
        })
    }
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Patch => "PATCH",
            Method::Delete => "DELETE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: Method,
    pub path: String,
    pub query: BTreeMap<String, String>,
    pub token: Option<String>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn new(method: Method, path: impl Into<String>) -> Self {
        Self { method, path: path.into(), query: BTreeMap::new(), token: None, body: Vec::new() }
    }

    pub fn query(mut self, key: &str, value: impl ToString) -> Self {
        self.query.insert(key.to_string(), value.to_string());
        self
    }

    pub fn token(mut self, token: Option<&str>) -> Self {
        self.token = token.map(str::to_string);
        self
    }

    pub fn body(mut self, body: impl Into<Vec<u8>>) -> Self {
        self.body = body.into();
        self
    }

    pub fn json(self, value: &impl Serialize) -> Self {
        let body = serde_json::to_vec(value).expect("request body serializes");
        self.body(body)
    }
}

pub const JSON: &str = "application/json";
pub const TEXT: &str = "text/plain; charset=utf-8";
pub const TSV: &str = "text/tab-separated-values; charset=utf-8";
pub const TAR: &str = "application/x-tar";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl ApiResponse {
    pub fn json(status: u16, value: &impl Serialize) -> Self {
        Self { status, content_type: JSON, body: serde_json::to_vec(value).expect("response serializes") }
    }

    pub fn text(content_type: &'static str, body: impl Into<Vec<u8>>) -> Self {
        Self { status: 200, content_type, body: body.into() }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn value(&self) -> Option<Value> {
        serde_json::from_slice(&self.body).ok()
    }

    /// The error envelope's code, if this is an error response.
    pub fn error_code(&self) -> Option<String> {
        let v = self.value()?;
        Some(v.get("error")?.get("code")?.as_str()?.to_string())
    }

    pub fn error_message(&self) -> Option<String> {
        let v = self.value()?;
        Some(v.get("error")?.get("message")?.as_str()?.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub entity: Option<EntityRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

/// A failed request, before it is rendered as an envelope.
#[derive(Debug)]
pub enum ApiError {
    Domain(AdminError),
    Store(StoreError),
    BadRequest(String),
    NotFound(String),
    MethodNotAllowed(String),
}

impl From<AdminError> for ApiError {
    fn from(e: AdminError) -> Self {
        ApiError::Domain(e)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Domain(d) => ApiError::Domain(d),
            other => ApiError::Store(other),
        }
    }
}

/// HTTP status for a domain error.
pub fn status_of(e: &AdminError) -> u16 {
    use AdminError::*;
    match e {
        Unauthenticated | BadCredential => 401,
        NotAuthorized(_) | InactiveAccount(_) | LanguageMismatch { .. } => 403,
        UnknownUser(_) | UnknownFile(_) | UnknownSentence { .. } | UnknownLanguage(_) | UnknownDictionary(_) => 404,
        DuplicateUser(_)
        | CapExceeded { .. }
        | AlreadyAssigned { .. }
        | NoActiveAssignment(_)
        | IncompleteFile { .. } => 409,
        _ => 422,
    }
}

fn entity_of(e: &AdminError) -> Option<EntityRef> {
    use AdminError::*;
    Some(match e {
        DuplicateUser(u) | UnknownUser(u) | InactiveAccount(u) | InvalidAssignee(u) => EntityRef::new("user", u),
        CapExceeded { assignee, .. } => EntityRef::new("user", assignee),
        UnknownFile(f) | NoActiveAssignment(f) => EntityRef::new("file", f),
        AlreadyAssigned { file, .. } | IncompleteFile { file, .. } => EntityRef::new("file", file),
        UnknownSentence { id, .. } => EntityRef::new("sentence", id),
        UnknownLanguage(l) => EntityRef::new("language", l),
        UnknownDictionary(d) => EntityRef::new("dictionary", d),
        _ => return None,
    })
}

impl ApiError {
    pub fn into_response(self) -> ApiResponse {
        let (status, code, message, entity) = match self {
            ApiError::Domain(e) => (status_of(&e), e.code().to_string(), e.to_string(), entity_of(&e)),
            ApiError::Store(e) => (503, "StoreUnavailable".to_string(), e.to_string(), None),
            ApiError::BadRequest(m) => (400, "BadRequest".to_string(), m, None),
            ApiError::NotFound(p) => (404, "NotFound".to_string(), format!("no route for {p}"), None),
            ApiError::MethodNotAllowed(p) => {
                (405, "MethodNotAllowed".to_string(), format!("method not allowed on {p}"), None)
            }
        };
        ApiResponse::json(status, &ErrorEnvelope { error: ErrorBody { code, message, entity } })
    }
}

type ApiResult = Result<ApiResponse, ApiError>;

// ---- request bodies ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginBody {
    pub user_id: UserId,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewUserBody {
    pub user_id: UserId,
    #[serde(default)]
    pub display_name: String,
    pub role: Role,
    pub password: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PatchUserBody {
    #[serde(default)]
    pub display_name: Option<String>,
    #[serde(default)]
    pub role: Option<Role>,
    #[serde(default)]
    pub password: Option<String>,
    #[serde(default)]
    pub active: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignBody {
    pub file_id: FileId,
    pub assignee: UserId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReassignBody {
    pub assignee: UserId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TagBody {
    pub tag: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditBody {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoticeBody {
    pub audience: Audience,
    pub body: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetagBody {
    /// Mapping table: `#FROM <name>` then `foreign\tproject` lines.
    pub mapping: String,
    /// An annotated-format file tagged with the foreign tagset.
    pub file: String,
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid JSON body: {e}")))
}

fn sentence_id(s: &str) -> Result<SentenceId, ApiError> {
    s.parse().map_err(|e: crate::corpus::CorpusError| ApiError::Domain(e.into()))
}

fn language(s: &str) -> Result<LanguageCode, ApiError> {
    LanguageCode::new(s).map_err(|e| ApiError::Domain(e.into()))
}

fn file_summary(view: &crate::admin::FileView) -> Value {
    json!({
        "file_id": view.file_id,
        "language": view.language,
        "completion": view.completion,
        "stats": view.stats,
        "assignment": view.assignment,
    })
}

/// Parses an uploaded corpus file: annotated format when it has `#SID`
/// blocks, raw format otherwise.
pub fn parse_upload(body: &[u8], engine: &Engine) -> Result<CorpusFile, ApiError> {
    let is_annotated = body.split(|&b| b == b'\n').any(|l| l.starts_with(b"#SID"));
    let parsed = if is_annotated {
        parse_annotated_file(body, Some(&engine.project().config().tagset))
    } else {
        parse_raw_file(body)
    };
    parsed.map_err(|e| ApiError::Domain(e.into()))
}

/// Dispatches one request. All requests are serialized by the caller.
pub fn route(engine: &mut Engine, req: &ApiRequest) -> ApiResponse {
    dispatch(engine, req).unwrap_or_else(ApiError::into_response)
}

fn actor(engine: &Engine, req: &ApiRequest) -> Result<UserId, ApiError> {
    let token = req.token.as_deref().ok_or(AdminError::Unauthenticated)?;
    Ok(engine.project().authenticate(token)?.clone())
}

fn dispatch(engine: &mut Engine, req: &ApiRequest) -> ApiResult {
    let path = req.path.trim_end_matches('/');
    let segs: Vec<&str> = path.split('/').skip(1).collect();
    let Some((&"api", rest)) = segs.split_first() else {
        return Err(ApiError::NotFound(req.path.clone()));
    };
    use Method::*;
    let m = req.method;
    let not_allowed = || Err(ApiError::MethodNotAllowed(req.path.clone()));

    match rest {
        ["login"] => match m {
            Post => login(engine, req),
            _ => not_allowed(),
        },
        ["logout"] => match m {
            Post => {
                let who = actor(engine, req)?;
                let token = req.token.clone().unwrap_or_default();
                engine.execute(Some(&who), Command::Logout { token })?;
                Ok(ApiResponse::json(200, &json!({ "ok": true })))
            }
            _ => not_allowed(),
        },
        ["users"] => match m {
            Get => {
                let who = actor(engine, req)?;
                Ok(ApiResponse::json(200, &engine.project().list_users(&who)?))
            }
            Post => create_user(engine, req),
            _ => not_allowed(),
        },
        ["users", id] => {
            let who = actor(engine, req)?;
            let user_id = UserId::new(*id);
            match m {
                Patch => {
                    let b: PatchUserBody = parse_json(&req.body)?;
                    let c = Command::ModifyUser {
                        user_id: user_id.clone(),
                        display_name: b.display_name,
                        role: b.role,
                        password: b.password,
                        active: b.active,
                    };
                    engine.execute(Some(&who), c)?;
                    let acct = engine.project().user(&user_id).expect("modified user exists");
                    Ok(ApiResponse::json(200, &UserSummary::from(acct)))
                }
                Delete => {
                    engine.execute(Some(&who), Command::DeleteUser { user_id: user_id.clone() })?;
                    let acct = engine.project().user(&user_id).expect("deactivated user exists");
                    Ok(ApiResponse::json(200, &UserSummary::from(acct)))
                }
                _ => not_allowed(),
            }
        }
        ["files"] => {
            let who = actor(engine, req)?;
            match m {
                Get => {
                    let files = engine.project().list_files(&who)?;
                    Ok(ApiResponse::json(200, &files.iter().map(file_summary).collect::<Vec<_>>()))
                }
                Post => {
                    engine.project().require_op(&who, Operation::UploadFile, None)?;
                    let file = parse_upload(&req.body, engine)?;
                    let d = engine.execute(Some(&who), Command::UploadFile { file })?;
                    let Event::FileUploaded { file_id, .. } = d.record.event else { unreachable!() };
                    Ok(ApiResponse::json(201, &json!({ "file_id": file_id })))
                }
                _ => not_allowed(),
            }
        }
        ["files", id] => match m {
            Get => {
                let who = actor(engine, req)?;
                let view = engine.project().file_view(&who, &FileId::new(*id))?;
                Ok(ApiResponse::json(200, &view))
            }
            _ => not_allowed(),
        },
        ["files", id, "download"] => match m {
            Get => {
                let who = actor(engine, req)?;
                let bytes = engine.project().download(&who, &FileId::new(*id))?;
                Ok(ApiResponse::text(TSV, bytes))
            }
            _ => not_allowed(),
        },
        ["files", id, "auto-tag"] => match m {
            Post => {
                let who = actor(engine, req)?;
                let d = engine.execute(Some(&who), Command::AutoTag { file_id: FileId::new(*id) })?;
                let Event::AutoTagged { applied, .. } = d.record.event else { unreachable!() };
                Ok(ApiResponse::json(200, &json!({ "applied": applied.len() })))
            }
            _ => not_allowed(),
        },
        ["files", id, "sentences", sid, "edit"] => match m {
            Post => {
                let who = actor(engine, req)?;
                let b: EditBody = parse_json(&req.body)?;
                let c = Command::EditSentence { file_id: FileId::new(*id), sentence: sentence_id(sid)?, text: b.text };
                let d = engine.execute(Some(&who), c)?;
                let Event::SentenceEdited { sentence, record, .. } = d.record.event else { unreachable!() };
                Ok(ApiResponse::json(200, &json!({ "sentence": sentence, "edit": record })))
            }
            _ => not_allowed(),
        },
        ["files", id, "sentences", sid, "tokens", index, "tag"] => match m {
            Put => {
                let who = actor(engine, req)?;
                let b: TagBody = parse_json(&req.body)?;
                let index: usize = index.parse().map_err(|_| ApiError::BadRequest(format!("token index {index:?}")))?;
                let sentence = sentence_id(sid)?;
                let file_id = FileId::new(*id);
                let c = Command::AssignTag { file_id: file_id.clone(), sentence: sentence.clone(), index, tag: b.tag };
                engine.execute(Some(&who), c)?;
                let file = &engine.project().file(&file_id).expect("tagged file exists").file;
                Ok(ApiResponse::json(200, &file.sentence(&sentence)))
            }
            _ => not_allowed(),
        },
        ["assignments"] => match m {
            Post => {
                let who = actor(engine, req)?;
                let b: AssignBody = parse_json(&req.body)?;
                let d = engine.execute(Some(&who), Command::AssignFile { file_id: b.file_id, assignee: b.assignee })?;
                assignment_response(engine, &d.record.event, 201)
            }
            _ => not_allowed(),
        },
        ["assignments", id, "reassign"] => match m {
            Post => {
                let who = actor(engine, req)?;
                let b: ReassignBody = parse_json(&req.body)?;
                let c = Command::ReassignFile { file_id: FileId::new(*id), assignee: b.assignee };
                let d = engine.execute(Some(&who), c)?;
                assignment_response(engine, &d.record.event, 201)
            }
            _ => not_allowed(),
        },
        ["assignments", id, "complete"] => match m {
            Post => {
                let who = actor(engine, req)?;
                let d = engine.execute(Some(&who), Command::CompleteFile { file_id: FileId::new(*id) })?;
                assignment_response(engine, &d.record.event, 200)
            }
            _ => not_allowed(),
        },
        ["lexicon", lang] => {
            let who = actor(engine, req)?;
            let lang = language(lang)?;
            match m {
                Get => {
                    let since = match req.query.get("since") {
                        Some(s) => s.parse().map_err(|_| ApiError::BadRequest(format!("since={s:?}")))?,
                        None => 0,
                    };
                    Ok(ApiResponse::json(200, &engine.project().lexicon_sync(&who, &lang, since)?))
                }
                Put => {
                    let edit: LexiconEdit = parse_json(&req.body)?;
                    engine.execute(Some(&who), Command::UpdateLexicon { language: lang.clone(), edit })?;
                    let version = engine.project().lexicon(&lang).map_or(0, |l| l.version);
                    Ok(ApiResponse::json(200, &json!({ "language": lang, "version": version })))
                }
                _ => not_allowed(),
            }
        }
        ["progress"] => match m {
            Get => {
                let who = actor(engine, req)?;
                let scope: ProgressScope = req.query.get("scope").map_or("project", String::as_str).parse()?;
                Ok(ApiResponse::json(200, &engine.project().progress(&who, scope)?))
            }
            _ => not_allowed(),
        },
        ["notices"] => {
            let who = actor(engine, req)?;
            match m {
                Get => Ok(ApiResponse::json(200, &engine.project().list_notices(&who)?)),
                Post => {
                    let b: NoticeBody = parse_json(&req.body)?;
                    let d = engine.execute(Some(&who), Command::PostNotice { audience: b.audience, body: b.body })?;
                    let Event::NoticePosted { notice_id, .. } = d.record.event else { unreachable!() };
                    Ok(ApiResponse::json(201, &json!({ "notice_id": notice_id })))
                }
                _ => not_allowed(),
            }
        }
        ["iaa"] => match m {
            Get => {
                let who = actor(engine, req)?;
                let q = |k: &str| req.query.get(k).ok_or_else(|| ApiError::BadRequest(format!("missing {k}")));
                let (a, b) = (FileId::new(q("fileA")?), FileId::new(q("fileB")?));
                let report = engine.project().agreement(&who, &a, &b)?;
                if req.query.get("format").map(String::as_str) == Some("json") {
                    Ok(ApiResponse::json(200, &report))
                } else {
                    Ok(ApiResponse::text(TSV, agreement_table(&[report.row])))
                }
            }
            _ => not_allowed(),
        },
        ["adapt"] => match m {
            Post => adapt(engine, req),
            _ => not_allowed(),
        },
        ["dictionaries"] => match m {
            Post => {
                let who = actor(engine, req)?;
                engine.project().require_op(&who, Operation::LoadDictionary, None)?;
                let dictionary = load_dictionary(&req.body).map_err(AdminError::from)?;
                let pair = dictionary.pair_key();
                let entries = dictionary.entries.len();
                engine.execute(Some(&who), Command::LoadDictionary { dictionary })?;
                Ok(ApiResponse::json(201, &json!({ "pair": pair, "entries": entries })))
            }
            _ => not_allowed(),
        },
        ["translate", id] => match m {
            Get => {
                let who = actor(engine, req)?;
                let pair = req.query.get("pair").ok_or_else(|| ApiError::BadRequest("missing pair".into()))?;
                Ok(ApiResponse::json(200, &engine.project().gloss(&who, &FileId::new(*id), pair)?))
            }
            _ => not_allowed(),
        },
        ["export"] => match m {
            Get => {
                let who = actor(engine, req)?;
                engine.project().require_op(&who, Operation::ExportProject, None)?;
                let format: ExportFormat = req.query.get("format").map_or("native", String::as_str).parse()?;
                Ok(ApiResponse::text(TAR, export_archive(engine.project(), format)))
            }
            _ => not_allowed(),
        },
        _ => Err(ApiError::NotFound(req.path.clone())),
    }
}

fn login(engine: &mut Engine, req: &ApiRequest) -> ApiResult {
    let b: LoginBody = parse_json(&req.body)?;
    let d = engine.execute(None, Command::Login { user_id: b.user_id.clone(), password: b.password })?;
    let role = engine.project().user(&b.user_id).map(|u| u.role.clone());
    Ok(ApiResponse::json(200, &json!({ "token": d.token, "user_id": b.user_id, "role": role })))
}

fn create_user(engine: &mut Engine, req: &ApiRequest) -> ApiResult {
    // anonymous requests are self-registrations
    let who = match &req.token {
        Some(_) => Some(actor(engine, req)?),
        None => None,
    };
    let b: NewUserBody = parse_json(&req.body)?;
    let c = Command::CreateUser {
        user_id: b.user_id.clone(),
        display_name: b.display_name,
        role: b.role,
        password: b.password,
    };
    engine.execute(who.as_ref(), c)?;
    let acct = engine.project().user(&b.user_id).expect("created user exists");
    Ok(ApiResponse::json(201, &UserSummary::from(acct)))
}

fn assignment_response(engine: &Engine, event: &Event, status: u16) -> ApiResult {
    let id = match event {
        Event::FileAssigned { assignment, .. }
        | Event::FileReassigned { assignment, .. }
        | Event::AssignmentCompleted { assignment } => *assignment,
        _ => unreachable!("assignment commands yield assignment events"),
    };
    Ok(ApiResponse::json(status, &engine.project().assignment(id)))
}

/// `?kind=text&language=&domain=&start=` with raw bytes as the body turns
/// foreign text into a raw-format file. `?kind=retag` with a [`RetagBody`]
/// maps foreign tags onto the project tagset. `&upload=true` also uploads
/// the result.
fn adapt(engine: &mut Engine, req: &ApiRequest) -> ApiResult {
    let who = actor(engine, req)?;
    engine.project().require_op(&who, Operation::Adapt, None)?;
    let q = |k: &str| req.query.get(k).ok_or_else(|| ApiError::BadRequest(format!("missing {k}")));
    let upload = req.query.get("upload").is_some_and(|v| v == "true" || v == "1");
    let (file, mut out) = match q("kind")?.as_str() {
        "text" => {
            let lang = language(q("language")?)?;
            let domain = DomainLabel::new(q("domain")?.as_str()).map_err(AdminError::from)?;
            let start: u32 = match req.query.get("start") {
                Some(s) => s.parse().map_err(|_| ApiError::BadRequest(format!("start={s:?}")))?,
                None => 1,
            };
            let normalized = normalize_text(&req.body);
            let sentences = segment_sentences(&normalized.text);
            let annotated = assign_ids(&sentences, &domain, start).map_err(AdminError::from)?;
            let file = CorpusFile::new(lang, domain, annotated).map_err(AdminError::from)?;
            let text = String::from_utf8(serialize_raw_file(&file)).expect("serialized files are UTF-8");
            let out = json!({
                "file": text,
                "sentences": file.sentences.len(),
                "replacements": normalized.replacements,
            });
            (file, out)
        }
        "retag" => {
            let b: RetagBody = parse_json(&req.body)?;
            let tagset = &engine.project().config().tagset;
            let mapping = TagMapping::parse(&b.mapping, tagset).map_err(AdminError::from)?;
            let foreign = parse_annotated_file(b.file.as_bytes(), None).map_err(AdminError::from)?;
            let file = map_foreign_tags(&foreign, &mapping).map_err(AdminError::from)?;
            let text = String::from_utf8(serialize_annotated_file(&file)).expect("serialized files are UTF-8");
            (file, json!({ "file": text }))
        }
        other => return Err(ApiError::BadRequest(format!("unknown adapt kind {other:?}"))),
    };
    if upload {
        let d = engine.execute(Some(&who), Command::UploadFile { file })?;
        let Event::FileUploaded { file_id, .. } = d.record.event else { unreachable!() };
        out["file_id"] = json!(file_id);
        return Ok(ApiResponse::json(201, &out));
    }
    Ok(ApiResponse::json(200, &out))
}
