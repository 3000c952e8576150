//! The central annotation service: configuration, the request router, the
//! HTTP front end and project export.

pub mod api;
pub mod archive;
mod http;

pub use api::{route, ApiError, ApiRequest, ApiResponse, ErrorEnvelope, Method};
pub use archive::{export_archive, import_native, parallel_index, read_entries, ExportFormat};
pub use http::{router, serve, serve_listener};

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::admin::{ProjectConfig, UserId, DEFAULT_MAX_ACTIVE_ASSIGNMENTS};
use crate::corpus::{LanguageCode, Tagset};
use crate::store::{Bootstrap, Engine, StoreError};

/// Tags used when no tagset file is configured: the universal POS labels.
pub const DEFAULT_TAGSET: &str =
    "#TAGSET upos\nADJ\nADP\nADV\nAUX\nCCONJ\nDET\nINTJ\nNOUN\nNUM\nPART\nPRON\nPROPN\nPUNCT\nSCONJ\nSYM\nVERB\nX\n";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{key}: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("{key} is required")]
    Missing { key: &'static str },
}

/// Service settings, normally read from `CORPUSDESK_*` environment keys.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub store: PathBuf,
    pub max_active_assignments: usize,
    pub open_registration: bool,
    pub tagset: Tagset,
    pub languages: Vec<LanguageCode>,
    pub master: UserId,
    pub master_password: Option<String>,
}

impl ServiceConfig {
    pub const BIND: &'static str = "CORPUSDESK_BIND";
    pub const STORE: &'static str = "CORPUSDESK_STORE";
    pub const MAX_ACTIVE: &'static str = "CORPUSDESK_MAX_ACTIVE";
    pub const OPEN_REGISTRATION: &'static str = "CORPUSDESK_OPEN_REGISTRATION";
    pub const TAGSET_FILE: &'static str = "CORPUSDESK_TAGSET_FILE";
    pub const LANGUAGES: &'static str = "CORPUSDESK_LANGUAGES";
    pub const MASTER: &'static str = "CORPUSDESK_MASTER";
    pub const MASTER_PASSWORD: &'static str = "CORPUSDESK_MASTER_PASSWORD";

    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Reads settings through `get`, applying defaults for absent keys.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let invalid = |key, reason: String| ConfigError::Invalid { key, reason };
        let bind = get(Self::BIND)
            .unwrap_or_else(|| "127.0.0.1:8080".into())
            .parse()
            .map_err(|e| invalid(Self::BIND, format!("{e}")))?;
        let store = PathBuf::from(get(Self::STORE).unwrap_or_else(|| "corpusdesk-store".into()));
        let max_active_assignments = match get(Self::MAX_ACTIVE) {
            Some(v) => match v.parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => return Err(invalid(Self::MAX_ACTIVE, format!("{v:?} is not a positive integer"))),
            },
            None => DEFAULT_MAX_ACTIVE_ASSIGNMENTS,
        };
        let open_registration = match get(Self::OPEN_REGISTRATION).as_deref() {
            None | Some("0" | "false" | "no" | "") => false,
            Some("1" | "true" | "yes") => true,
            Some(v) => return Err(invalid(Self::OPEN_REGISTRATION, format!("{v:?} is not a boolean"))),
        };
        let tagset_text = match get(Self::TAGSET_FILE) {
            Some(path) => {
                std::fs::read_to_string(&path).map_err(|e| invalid(Self::TAGSET_FILE, format!("{path}: {e}")))?
            }
            None => DEFAULT_TAGSET.to_string(),
        };
        let tagset = Tagset::parse(&tagset_text).map_err(|e| invalid(Self::TAGSET_FILE, e.to_string()))?;
        let languages = get(Self::LANGUAGES)
            .ok_or(ConfigError::Missing { key: Self::LANGUAGES })?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| LanguageCode::new(s).map_err(|e| invalid(Self::LANGUAGES, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if languages.is_empty() {
            return Err(ConfigError::Missing { key: Self::LANGUAGES });
        }
        let master = UserId::parse(&get(Self::MASTER).unwrap_or_else(|| "admin".into()))
            .map_err(|e| invalid(Self::MASTER, e.to_string()))?;
        Ok(Self {
            bind,
            store,
            max_active_assignments,
            open_registration,
            tagset,
            languages,
            master,
            master_password: get(Self::MASTER_PASSWORD),
        })
    }

    pub fn project_config(&self) -> ProjectConfig {
        let mut c = ProjectConfig::new(self.tagset.clone(), self.languages.iter().cloned());
        c.max_active_assignments = self.max_active_assignments;
        c.open_registration = self.open_registration;
        c
    }

    /// What a fresh store is initialised with. Needs the master password.
    pub fn bootstrap(&self) -> Result<Bootstrap, ConfigError> {
        let password = self.master_password.clone().ok_or(ConfigError::Missing { key: Self::MASTER_PASSWORD })?;
        Ok(Bootstrap {
            config: self.project_config(),
            master: self.master.clone(),
            master_name: "Master administrator".into(),
            master_password: password,
        })
    }

    /// Opens the configured store, creating the project on first use.
    pub fn open_engine(&self) -> Result<Engine, ServiceError> {
        let (rng, clock) = Engine::system_parts();
        if crate::store::EventStore::exists(&self.store) {
            Ok(Engine::open(&self.store, rng, clock)?)
        } else {
            Ok(Engine::create(&self.store, &self.bootstrap()?, rng, clock)?)
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("store unavailable: {0}")]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

/// A project engine shared between request handlers. Requests are
/// serialized: each one sees the effects of every request before it.
#[derive(Clone)]
pub struct Service {
    engine: Arc<Mutex<Engine>>,
}

impl Service {
    pub fn new(engine: Engine) -> Self {
        Self { engine: Arc::new(Mutex::new(engine)) }
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        let mut engine = self.engine.lock().unwrap_or_else(|p| p.into_inner());
        route(&mut engine, req)
    }

    /// Runs `f` with exclusive access to the engine.
    pub fn with_engine<T>(&self, f: impl FnOnce(&mut Engine) -> T) -> T {
        let mut engine = self.engine.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut engine)
    }
}
