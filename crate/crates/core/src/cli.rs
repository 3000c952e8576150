//! The `corpusdesk` command line.
//!
//! Every subcommand is one or more API requests, sent either to a running
//! server (`--server`) or straight to a local store (`--store`). Both paths
//! use the same router, so they succeed and fail alike. Exit codes: 0 on
//! success, 1 on a domain or I/O error, 2 on a usage error.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::admin::{Audience, Role, UserSummary};
use crate::annotation::LexiconEdit;
use crate::corpus::{CorpusStats, LanguageCode};
use crate::service::{route, ApiRequest, ApiResponse, Method, ServiceConfig};
use crate::store::Engine;

pub const PASSWORD_ENV: &str = "CORPUSDESK_PASSWORD";
pub const NEW_PASSWORD_ENV: &str = "CORPUSDESK_NEW_PASSWORD";
pub const SERVER_ENV: &str = "CORPUSDESK_SERVER";
pub const USER_ENV: &str = "CORPUSDESK_USER";

#[derive(Debug, Parser)]
#[command(name = "corpusdesk", version, about = "Parallel corpus annotation service and client")]
pub struct Cli {
    /// Base URL of a running service, e.g. http://127.0.0.1:8080; defaults to CORPUSDESK_SERVER.
    #[arg(long, global = true, conflicts_with = "store")]
    pub server: Option<String>,
    /// Work directly on a local store directory.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// User to authenticate as (default CORPUSDESK_USER); the password comes from CORPUSDESK_PASSWORD or a prompt.
    #[arg(long = "as", global = true)]
    pub user: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Human)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Tsv,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run the HTTP service on CORPUSDESK_BIND with the configured store.
    Serve,
    /// Upload a raw or annotated corpus file.
    Upload { path: PathBuf },
    /// Download a fully tagged file in annotated format.
    Download {
        #[arg(long)]
        file: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the whole project as a tar archive.
    Export {
        #[arg(long = "archive-format", value_parser = ["native", "columnar"], default_value = "native")]
        archive_format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Manage user accounts.
    Users {
        #[command(subcommand)]
        action: UsersAction,
    },
    /// Assign, reassign or complete a file.
    Assign(AssignArgs),
    /// Show work done against work to do.
    Progress {
        #[arg(long, value_parser = ["project", "language", "user", "timelog"], default_value = "project")]
        scope: String,
    },
    /// Sentence count, token count and mean sentence length of a file.
    Stats {
        #[arg(long)]
        file: String,
    },
    /// Inter-annotator agreement between two files with the same text.
    Iaa {
        #[arg(long = "file-a")]
        file_a: String,
        #[arg(long = "file-b")]
        file_b: String,
    },
    /// Convert foreign text or foreign tags into project format.
    Adapt(AdaptArgs),
    /// Read or edit a language's closed-class lexicon.
    Lexicon {
        #[command(subcommand)]
        action: LexiconAction,
    },
    /// Post a notice (master admin) or list notices.
    Notices {
        #[command(subcommand)]
        action: NoticeAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum UsersAction {
    List,
    Add {
        user_id: String,
        #[arg(long, value_parser = ["admin", "annotator", "master"])]
        role: String,
        #[arg(long)]
        language: Option<String>,
        #[arg(long, default_value = "")]
        name: String,
        /// Password for the new account; defaults to CORPUSDESK_NEW_PASSWORD.
        #[arg(long)]
        password: Option<String>,
    },
    Deactivate {
        user_id: String,
    },
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[arg(long)]
    pub file: String,
    #[arg(long, required_unless_present = "complete")]
    pub to: Option<String>,
    /// Move an active assignment to `--to`.
    #[arg(long, conflicts_with = "complete")]
    pub reassign: bool,
    /// Mark the file's active assignment completed.
    #[arg(long)]
    pub complete: bool,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    /// Input: foreign text, or a foreign-tagged annotated file with --mapping.
    pub input: PathBuf,
    #[arg(long, required_unless_present = "mapping")]
    pub language: Option<String>,
    #[arg(long, required_unless_present = "mapping")]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub start: u32,
    /// Tag mapping table; switches to re-tagging mode.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Upload the result as a new project file.
    #[arg(long)]
    pub upload: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LexiconAction {
    Show {
        language: String,
        #[arg(long, default_value_t = 0)]
        since: u64,
    },
    Set {
        language: String,
        surface: String,
        tag: String,
    },
    Remove {
        language: String,
        surface: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum NoticeAction {
    List,
    Post {
        #[arg(long)]
        language: Option<String>,
        body: String,
    },
}

/// Where requests go.
pub enum Backend {
    Http { base: String, agent: ureq::Agent },
    Local(Box<Engine>),
}

impl Backend {
    pub fn http(base: &str) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Backend::Http { base: base.trim_end_matches('/').to_string(), agent }
    }

    pub fn call(&mut self, req: &ApiRequest) -> Result<ApiResponse, String> {
        match self {
            Backend::Local(engine) => Ok(route(engine, req)),
            Backend::Http { base, agent } => http_call(agent, base, req),
        }
    }
}

fn http_call(agent: &ureq::Agent, base: &str, req: &ApiRequest) -> Result<ApiResponse, String> {
    let url = format!("{base}{}", req.path);
    let auth = req.token.as_ref().map(|t| format!("Bearer {t}"));
    macro_rules! prepare {
        ($b:expr) => {{
            let b = $b.query_pairs(req.query.iter().map(|(k, v)| (k.as_str(), v.as_str())));
            match &auth {
                Some(a) => b.header("Authorization", a),
                None => b,
            }
        }};
    }
    let result = match req.method {
        Method::Get => prepare!(agent.get(&url)).call(),
        Method::Delete => prepare!(agent.delete(&url)).call(),
        Method::Post => prepare!(agent.post(&url)).send(&req.body[..]),
        Method::Put => prepare!(agent.put(&url)).send(&req.body[..]),
        Method::Patch => prepare!(agent.patch(&url)).send(&req.body[..]),
    };
    let mut resp = result.map_err(|e| format!("cannot reach {base}: {e}"))?;
    let status = resp.status().as_u16();
    let content_type = match resp.headers().get("content-type").and_then(|v| v.to_str().ok()) {
        Some(t) if t.starts_with("application/json") => crate::service::api::JSON,
        Some(t) if t.starts_with("application/x-tar") => crate::service::api::TAR,
        Some(t) if t.starts_with("text/tab-separated-values") => crate::service::api::TSV,
        _ => crate::service::api::TEXT,
    };
    let body = resp.body_mut().with_config().limit(u64::MAX).read_to_vec().map_err(|e| e.to_string())?;
    Ok(ApiResponse { status, content_type, body })
}

/// Output streams and environment for one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub env: &'a dyn Fn(&str) -> Option<String>,
    pub stdin: &'a mut dyn BufRead,
}

/// Runs with the process environment and standard streams.
pub fn main_with_env() -> i32 {
    let env = |k: &str| std::env::var(k).ok();
    let stdin = std::io::stdin();
    let mut stdin = stdin.lock();
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let mut io = Io { out: &mut out, err: &mut err, env: &env, stdin: &mut stdin };
    run(std::env::args_os(), &mut io)
}

/// Parses `args` and executes; returns the exit code.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(io.out, "{e}");
                return 0;
            }
            let _ = write!(io.err, "{}", e.render());
            return 2;
        }
    };
    match execute(&cli, io) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(io.err, "error: {m}");
            let _ = writeln!(
                io.err,
                "usage: corpusdesk [--server URL | --store DIR] [--as USER] [--format human|tsv] <command>"
            );
            2
        }
        Err(Failure::Domain(m)) => {
            let _ = writeln!(io.err, "error: {m}");
            1
        }
    }
}

enum Failure {
    Usage(String),
    Domain(String),
}

type Outcome = Result<(), Failure>;

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

/// An authenticated connection; logs out when finished.
struct Session {
    backend: Backend,
    token: Option<String>,
}

impl Session {
    fn call(&mut self, req: ApiRequest) -> Result<ApiResponse, Failure> {
        let req = req.token(self.token.as_deref());
        let resp = self.backend.call(&req).map_err(Failure::Domain)?;
        if resp.is_success() {
            Ok(resp)
        } else {
            let code = resp.error_code().unwrap_or_else(|| format!("HTTP {}", resp.status));
            let msg = resp.error_message().unwrap_or_default();
            Err(Failure::Domain(format!("[{code}] {msg}")))
        }
    }

    fn json(&mut self, req: ApiRequest) -> Result<Value, Failure> {
        let resp = self.call(req)?;
        resp.value().ok_or_else(|| domain("malformed response"))
    }

    fn close(mut self) {
        if self.token.is_some() {
            let _ = self.call(ApiRequest::new(Method::Post, "/api/logout"));
        }
    }
}

fn config(cli: &Cli, io: &Io<'_>) -> Result<ServiceConfig, Failure> {
    let mut config = ServiceConfig::from_lookup(|k| (io.env)(k)).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(store) = &cli.store {
        config.store = store.clone();
    }
    Ok(config)
}

fn open_backend(cli: &Cli, io: &Io<'_>) -> Result<Backend, Failure> {
    let server = cli.server.clone().or_else(|| (io.env)(SERVER_ENV)).filter(|_| cli.store.is_none());
    match (&server, &cli.store) {
        (Some(url), None) => Ok(Backend::http(url)),
        (None, Some(_)) => {
            let engine = config(cli, io)?.open_engine().map_err(domain)?;
            Ok(Backend::Local(Box::new(engine)))
        }
        _ => Err(Failure::Usage("exactly one of --server or --store is required".into())),
    }
}

fn password(io: &mut Io<'_>) -> Result<String, Failure> {
    if let Some(p) = (io.env)(PASSWORD_ENV) {
        return Ok(p);
    }
    let _ = write!(io.err, "password: ");
    let _ = io.err.flush();
    let mut line = String::new();
    io.stdin.read_line(&mut line).map_err(domain)?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn login(cli: &Cli, io: &mut Io<'_>) -> Result<Session, Failure> {
    let user = cli
        .user
        .clone()
        .or_else(|| (io.env)(USER_ENV))
        .ok_or_else(|| Failure::Usage("--as <user> is required".into()))?;
    let backend = open_backend(cli, io)?;
    let pw = password(io)?;
    let req = ApiRequest::new(Method::Post, "/api/login").json(&json!({ "user_id": user, "password": pw }));
    let mut session = Session { backend, token: None };
    let v = session.json(req)?;
    session.token = v["token"].as_str().map(str::to_string);
    Ok(session)
}

fn execute(cli: &Cli, io: &mut Io<'_>) -> Outcome {
    if let CliCommand::Serve = cli.command {
        return serve(cli, io);
    }
    let mut s = login(cli, io)?;
    let result = dispatch(cli, &mut s, io);
    s.close();
    result
}

fn serve(cli: &Cli, io: &mut Io<'_>) -> Outcome {
    let config = config(cli, io)?;
    let _ = writeln!(io.err, "serving {} on http://{}", config.store.display(), config.bind);
    let rt = tokio::runtime::Runtime::new().map_err(domain)?;
    rt.block_on(crate::service::serve(&config)).map_err(domain)
}

fn write_bytes(io: &mut Io<'_>, out: Option<&PathBuf>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| domain(format!("{}: {e}", p.display()))),
        None => io.out.write_all(bytes).map_err(domain),
    }
}

fn read_input(path: &PathBuf) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn dispatch(cli: &Cli, s: &mut Session, io: &mut Io<'_>) -> Outcome {
    let tsv = cli.format == OutputFormat::Tsv;
    let new_password = (io.env)(NEW_PASSWORD_ENV);
    let o = &mut *io.out;
    let w = |e: std::io::Error| domain(e);
    match &cli.command {
        CliCommand::Serve => unreachable!("handled before login"),
        CliCommand::Upload { path } => {
            let v = s.json(ApiRequest::new(Method::Post, "/api/files").body(read_input(path)?))?;
            let id = v["file_id"].as_str().unwrap_or_default();
            if tsv { writeln!(o, "{id}") } else { writeln!(o, "uploaded {} as {id}", path.display()) }.map_err(w)
        }
        CliCommand::Download { file, out } => {
            let resp = s.call(ApiRequest::new(Method::Get, format!("/api/files/{file}/download")))?;
            write_bytes(io, out.as_ref(), &resp.body)
        }
        CliCommand::Export { archive_format, out } => {
            let req = ApiRequest::new(Method::Get, "/api/export").query("format", archive_format);
            let resp = s.call(req)?;
            write_bytes(io, Some(out), &resp.body)?;
            let n = resp.body.len();
            let o = &mut *io.out;
            if tsv {
                writeln!(o, "{}\t{n}", out.display())
            } else {
                writeln!(o, "wrote {n} bytes to {}", out.display())
            }
            .map_err(w)
        }
        CliCommand::Users { action } => users(s, action, new_password, tsv, o),
        CliCommand::Assign(a) => assign(s, a, tsv, o),
        CliCommand::Progress { scope } => {
            let v = s.json(ApiRequest::new(Method::Get, "/api/progress").query("scope", scope))?;
            print_progress(&v, tsv, o).map_err(w)
        }
        CliCommand::Stats { file } => {
            let v = s.json(ApiRequest::new(Method::Get, format!("/api/files/{file}")))?;
            let st: CorpusStats = serde_json::from_value(v["stats"].clone()).map_err(domain)?;
            let (n, t, m) = (st.sentence_count, st.token_count, st.mean_tokens_per_sentence);
            if tsv {
                writeln!(o, "{n}\t{t}\t{m:?}")
            } else {
                writeln!(o, "sentences: {n}\ntokens: {t}\nmean tokens per sentence: {m:?}")
            }
            .map_err(w)
        }
        CliCommand::Iaa { file_a, file_b } => {
            let req = ApiRequest::new(Method::Get, "/api/iaa").query("fileA", file_a).query("fileB", file_b);
            let resp = s.call(req)?;
            o.write_all(&resp.body).map_err(w)
        }
        CliCommand::Adapt(a) => adapt(s, a, tsv, io),
        CliCommand::Lexicon { action } => lexicon(s, action, tsv, o),
        CliCommand::Notices { action } => notices(s, action, tsv, o),
    }
}

fn users(s: &mut Session, action: &UsersAction, new_password: Option<String>, tsv: bool, o: &mut dyn Write) -> Outcome {
    let print = |o: &mut dyn Write, u: &UserSummary| {
        let lang = u.role.language().map_or("-".to_string(), LanguageCode::to_string);
        let kind = match u.role {
            Role::MasterAdmin => "master",
            Role::Admin(_) => "admin",
            Role::Annotator(_) => "annotator",
        };
        let state = if u.active { "active" } else { "inactive" };
        if tsv {
            writeln!(o, "{}\t{kind}\t{lang}\t{state}\t{}", u.user_id, u.display_name)
        } else {
            writeln!(o, "{:<16} {:<10} {:<6} {:<8} {}", u.user_id.as_str(), kind, lang, state, u.display_name)
        }
    };
    let one = |s: &mut Session, req: ApiRequest, o: &mut dyn Write| -> Outcome {
        let v = s.json(req)?;
        let u: UserSummary = serde_json::from_value(v).map_err(domain)?;
        print(o, &u).map_err(domain)
    };
    match action {
        UsersAction::List => {
            let v = s.json(ApiRequest::new(Method::Get, "/api/users"))?;
            let list: Vec<UserSummary> = serde_json::from_value(v).map_err(domain)?;
            for u in &list {
                print(o, u).map_err(domain)?;
            }
            Ok(())
        }
        UsersAction::Add { user_id, role, language, name, password } => {
            let lang = || -> Result<LanguageCode, Failure> {
                let l =
                    language.as_deref().ok_or_else(|| Failure::Usage(format!("--language is required for {role}")))?;
                LanguageCode::new(l).map_err(|e| Failure::Usage(e.to_string()))
            };
            let role = match role.as_str() {
                "master" => Role::MasterAdmin,
                "admin" => Role::Admin(lang()?),
                _ => Role::Annotator(lang()?),
            };
            let password = password
                .clone()
                .or(new_password)
                .ok_or_else(|| Failure::Usage(format!("--password or {NEW_PASSWORD_ENV} is required")))?;
            let body = json!({ "user_id": user_id, "display_name": name, "role": role, "password": password });
            one(s, ApiRequest::new(Method::Post, "/api/users").json(&body), o)
        }
        UsersAction::Deactivate { user_id } => {
            one(s, ApiRequest::new(Method::Delete, format!("/api/users/{user_id}")), o)
        }
    }
}

fn assign(s: &mut Session, a: &AssignArgs, tsv: bool, o: &mut dyn Write) -> Outcome {
    let req = if a.complete {
        ApiRequest::new(Method::Post, format!("/api/assignments/{}/complete", a.file))
    } else if a.reassign {
        ApiRequest::new(Method::Post, format!("/api/assignments/{}/reassign", a.file))
            .json(&json!({ "assignee": a.to }))
    } else {
        ApiRequest::new(Method::Post, "/api/assignments").json(&json!({ "file_id": a.file, "assignee": a.to }))
    };
    let v = s.json(req)?;
    let (id, file, who, state) = (
        &v["id"],
        v["file_id"].as_str().unwrap_or(""),
        v["assignee"].as_str().unwrap_or(""),
        v["state"].as_str().unwrap_or(""),
    );
    if tsv {
        writeln!(o, "{id}\t{file}\t{who}\t{state}")
    } else {
        writeln!(o, "assignment {id}: {file} -> {who} ({state})")
    }
    .map_err(domain)
}

fn print_progress(v: &Value, tsv: bool, o: &mut dyn Write) -> std::io::Result<()> {
    let scope = v["scope"].as_str().unwrap_or("");
    let empty = Vec::new();
    if scope == "time_log" {
        for s in v["sessions"].as_array().unwrap_or(&empty) {
            let out = s["logout_at"].as_str().unwrap_or("-");
            writeln!(o, "{}\t{}\t{out}", s["user_id"].as_str().unwrap_or(""), s["login_at"].as_str().unwrap_or(""))?;
        }
        return Ok(());
    }
    let rows = v["rows"].as_array().unwrap_or(&empty);
    let num = |r: &Value, k: &str| r[k].as_u64().unwrap_or(0);
    let frac = |r: &Value, k: &str| r[k].as_f64().unwrap_or(0.0);
    if tsv {
        writeln!(o, "unit\tfiles\tassigned\tcompleted\tsentences\tcomplete\tfile_fraction\tsentence_fraction")?;
    }
    for r in rows {
        let unit = r["unit"].as_str().unwrap_or("");
        if tsv {
            writeln!(
                o,
                "{unit}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                num(r, "files_total"),
                num(r, "files_assigned"),
                num(r, "files_completed"),
                num(r, "sentences_total"),
                num(r, "sentences_complete"),
                frac(r, "file_fraction"),
                frac(r, "sentence_fraction"),
            )?;
        } else {
            writeln!(
                o,
                "{unit}: files {}/{} completed ({} assigned), sentences {}/{} complete ({:.1}%)",
                num(r, "files_completed"),
                num(r, "files_total"),
                num(r, "files_assigned"),
                num(r, "sentences_complete"),
                num(r, "sentences_total"),
                100.0 * frac(r, "sentence_fraction"),
            )?;
        }
    }
    for pair in v["per_annotator"].as_array().unwrap_or(&empty) {
        let (user, n) = (pair[0].as_str().unwrap_or(""), pair[1].as_u64().unwrap_or(0));
        if tsv {
            writeln!(o, "#completed\t{user}\t{n}")?;
        } else {
            writeln!(o, "  {user} completed {n}")?;
        }
    }
    Ok(())
}

fn adapt(s: &mut Session, a: &AdaptArgs, tsv: bool, io: &mut Io<'_>) -> Outcome {
    let input = read_input(&a.input)?;
    let mut req = ApiRequest::new(Method::Post, "/api/adapt");
    if a.upload {
        req = req.query("upload", "true");
    }
    let req = match &a.mapping {
        Some(m) => {
            let mapping = String::from_utf8(read_input(m)?).map_err(|_| domain("mapping is not UTF-8"))?;
            let file = String::from_utf8(input).map_err(|_| domain("input is not UTF-8"))?;
            req.query("kind", "retag").json(&json!({ "mapping": mapping, "file": file }))
        }
        None => req
            .query("kind", "text")
            .query("language", a.language.as_deref().unwrap_or_default())
            .query("domain", a.domain.as_deref().unwrap_or_default())
            .query("start", a.start)
            .body(input),
    };
    let v = s.json(req)?;
    if let Some(id) = v["file_id"].as_str() {
        let o = &mut *io.out;
        return if tsv { writeln!(o, "{id}") } else { writeln!(o, "uploaded as {id}") }.map_err(domain);
    }
    let text = v["file"].as_str().unwrap_or_default().to_string();
    write_bytes(io, a.out.as_ref(), text.as_bytes())
}

fn lexicon(s: &mut Session, action: &LexiconAction, tsv: bool, o: &mut dyn Write) -> Outcome {
    let (lang, edit) = match action {
        LexiconAction::Show { language, since } => {
            let req = ApiRequest::new(Method::Get, format!("/api/lexicon/{language}")).query("since", since);
            let v = s.json(req)?;
            let empty = Vec::new();
            if !tsv {
                writeln!(o, "{} lexicon version {}", language, v["version"]).map_err(domain)?;
            }
            for c in v["changes"].as_array().unwrap_or(&empty) {
                let tag = c["tag"].as_str().unwrap_or("-");
                writeln!(o, "{}\t{}\t{tag}", c["version"], c["surface"].as_str().unwrap_or("")).map_err(domain)?;
            }
            return Ok(());
        }
        LexiconAction::Set { language, surface, tag } => {
            (language, LexiconEdit::Upsert { surface: surface.clone(), tag: tag.clone() })
        }
        LexiconAction::Remove { language, surface } => (language, LexiconEdit::Delete { surface: surface.clone() }),
    };
    let v = s.json(ApiRequest::new(Method::Put, format!("/api/lexicon/{lang}")).json(&edit))?;
    if tsv { writeln!(o, "{}", v["version"]) } else { writeln!(o, "{lang} lexicon now at version {}", v["version"]) }
        .map_err(domain)
}

fn notices(s: &mut Session, action: &NoticeAction, tsv: bool, o: &mut dyn Write) -> Outcome {
    match action {
        NoticeAction::List => {
            let v = s.json(ApiRequest::new(Method::Get, "/api/notices"))?;
            let empty = Vec::new();
            for n in v.as_array().unwrap_or(&empty) {
                let (id, author, body) =
                    (&n["notice_id"], n["author"].as_str().unwrap_or(""), n["body"].as_str().unwrap_or(""));
                if tsv { writeln!(o, "{id}\t{author}\t{body}") } else { writeln!(o, "#{id} from {author}: {body}") }
                    .map_err(domain)?;
            }
            Ok(())
        }
        NoticeAction::Post { language, body } => {
            let audience = match language {
                Some(l) => {
                    Audience::Language(LanguageCode::new(l.as_str()).map_err(|e| Failure::Usage(e.to_string()))?)
                }
                None => Audience::All,
            };
            let v = s.json(
                ApiRequest::new(Method::Post, "/api/notices").json(&json!({ "audience": audience, "body": body })),
            )?;
            if tsv { writeln!(o, "{}", v["notice_id"]) } else { writeln!(o, "posted notice {}", v["notice_id"]) }
                .map_err(domain)
        }
    }
}
