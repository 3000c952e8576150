//! Durable storage for a [`Project`]: an append-only JSON-lines event log
//! plus periodic snapshots.
//!
//! Every record is written and fsynced before the mutation is applied in
//! memory and acknowledged. Recovery loads the newest snapshot and replays
//! the log records after it. A torn final line (a crash mid-append) is cut
//! off; damage anywhere else is reported as corruption.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeDelta, Utc};
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::{AdminError, Command, Decision, EventRecord, Project, ProjectConfig, UserId};

const LOG_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";
const LOCK_FILE: &str = "lock";

/// Default number of appended records between snapshots.
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 256;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("store at {0} is in use by another process")]
    Locked(PathBuf),
    #[error("no project in {0}")]
    Missing(PathBuf),
    #[error("a project already exists in {0}")]
    Exists(PathBuf),
    #[error("corrupt event log at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Domain(#[from] AdminError),
}

/// Source of timestamps for new records.
pub trait Clock: Send {
    fn now(&mut self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&mut self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A deterministic clock that advances by a fixed step on every reading.
#[derive(Debug, Clone)]
pub struct SteppingClock {
    next: DateTime<Utc>,
    step: TimeDelta,
}

impl SteppingClock {
    pub fn new(start: DateTime<Utc>, step: TimeDelta) -> Self {
        Self { next: start, step }
    }
}

impl Clock for SteppingClock {
    fn now(&mut self) -> DateTime<Utc> {
        let t = self.next;
        self.next += self.step;
        t
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    project: Project,
}

/// The on-disk half of an [`Engine`]. Holds an exclusive lock on the store
/// directory for its whole lifetime.
#[derive(Debug)]
pub struct EventStore {
    dir: PathBuf,
    log: File,
    _lock: File,
    snapshot_every: u64,
    since_snapshot: u64,
}

fn lock(dir: &Path) -> Result<File, StoreError> {
    let f = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(LOCK_FILE))?;
    match f.try_lock() {
        Ok(()) => Ok(f),
        Err(fs::TryLockError::WouldBlock) => Err(StoreError::Locked(dir.to_path_buf())),
        Err(fs::TryLockError::Error(e)) => Err(e.into()),
    }
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    File::open(dir)?.sync_all()
}

impl EventStore {
    pub fn exists(dir: &Path) -> bool {
        dir.join(LOG_FILE).exists() || dir.join(SNAPSHOT_FILE).exists()
    }

    /// Creates a store whose log starts with `genesis`.
    pub fn create(dir: &Path, genesis: &EventRecord) -> Result<(Self, Project), StoreError> {
        fs::create_dir_all(dir)?;
        let lock = lock(dir)?;
        if Self::exists(dir) {
            return Err(StoreError::Exists(dir.to_path_buf()));
        }
        let project = Project::from_genesis(genesis)?;
        let log = OpenOptions::new().create(true).append(true).open(dir.join(LOG_FILE))?;
        sync_dir(dir)?;
        let mut store = Self {
            dir: dir.to_path_buf(),
            log,
            _lock: lock,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            since_snapshot: 0,
        };
        store.append(genesis)?;
        Ok((store, project))
    }

    /// Creates a store from a complete project state, e.g. an imported one.
    /// The log starts empty after the snapshot.
    pub fn create_from_state(dir: &Path, project: &Project) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let lock = lock(dir)?;
        if Self::exists(dir) {
            return Err(StoreError::Exists(dir.to_path_buf()));
        }
        let log = OpenOptions::new().create(true).append(true).open(dir.join(LOG_FILE))?;
        let mut store = Self {
            dir: dir.to_path_buf(),
            log,
            _lock: lock,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            since_snapshot: 0,
        };
        store.snapshot(project)?;
        Ok(store)
    }

    /// Opens an existing store and rebuilds its project.
    pub fn open(dir: &Path) -> Result<(Self, Project), StoreError> {
        if !Self::exists(dir) {
            return Err(StoreError::Missing(dir.to_path_buf()));
        }
        let lock = lock(dir)?;
        let mut project = match fs::read(dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes)
                    .map_err(|e| StoreError::Corrupt { line: 0, reason: format!("snapshot: {e}") })?;
                Some(snap.project)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };

        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&path)?;
        let mut reader = BufReader::new(&mut file);
        let mut good_len: u64 = 0;
        let mut line_no = 0;
        let mut buf = Vec::new();
        let mut torn = false;
        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let complete = buf.ends_with(b"\n");
            let record = match serde_json::from_slice::<EventRecord>(&buf) {
                Ok(r) if complete => r,
                Ok(_) | Err(_) => {
                    // only the final line may be damaged
                    let mut rest = Vec::new();
                    reader.read_to_end(&mut rest)?;
                    if !rest.is_empty() {
                        return Err(StoreError::Corrupt { line: line_no, reason: "unreadable record".into() });
                    }
                    torn = true;
                    break;
                }
            };
            good_len += n as u64;
            match &mut project {
                None => {
                    if record.seq != 1 {
                        return Err(StoreError::Corrupt { line: line_no, reason: "log does not start at 1".into() });
                    }
                    project = Some(
                        Project::from_genesis(&record)
                            .map_err(|e| StoreError::Corrupt { line: line_no, reason: e.to_string() })?,
                    );
                }
                Some(p) if record.seq <= p.seq() => {}
                Some(p) if record.seq == p.seq() + 1 => p.apply(&record),
                Some(p) => {
                    return Err(StoreError::Corrupt {
                        line: line_no,
                        reason: format!("expected seq {}, found {}", p.seq() + 1, record.seq),
                    })
                }
            }
        }
        drop(reader);
        if torn {
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        let project = project.ok_or_else(|| StoreError::Missing(dir.to_path_buf()))?;
        let mut log = OpenOptions::new().append(true).open(&path)?;
        log.seek(SeekFrom::End(0))?;
        let store = Self {
            dir: dir.to_path_buf(),
            log,
            _lock: lock,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            since_snapshot: 0,
        };
        Ok((store, project))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// 0 disables automatic snapshots.
    pub fn set_snapshot_every(&mut self, every: u64) {
        self.snapshot_every = every;
    }

    /// Appends one record and waits until it is on disk.
    pub fn append(&mut self, record: &EventRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(record).map_err(io::Error::other)?;
        line.push(b'\n');
        self.log.write_all(&line)?;
        self.log.sync_data()?;
        self.since_snapshot += 1;
        Ok(())
    }

    /// Writes a snapshot atomically (temp file, fsync, rename).
    pub fn snapshot(&mut self, project: &Project) -> Result<(), StoreError> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let body =
            serde_json::to_vec(&Snapshot { seq: project.seq(), project: project.clone() }).map_err(io::Error::other)?;
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        sync_dir(&self.dir)?;
        self.since_snapshot = 0;
        Ok(())
    }

    fn snapshot_due(&self) -> bool {
        self.snapshot_every > 0 && self.since_snapshot >= self.snapshot_every
    }

    /// All records currently in the log, in order.
    pub fn read_log(dir: &Path) -> Result<Vec<EventRecord>, StoreError> {
        let text = fs::read_to_string(dir.join(LOG_FILE))?;
        text.lines()
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| StoreError::Corrupt { line: i + 1, reason: e.to_string() })
            })
            .collect()
    }
}

/// A project bound to its store, clock and randomness source.
pub struct Engine {
    project: Project,
    store: EventStore,
    rng: Box<dyn RngCore + Send>,
    clock: Box<dyn Clock>,
}

/// Everything needed to start a fresh project.
#[derive(Debug, Clone)]
pub struct Bootstrap {
    pub config: ProjectConfig,
    pub master: UserId,
    pub master_name: String,
    pub master_password: String,
}

impl Engine {
    pub fn create(
        dir: &Path,
        boot: &Bootstrap,
        mut rng: Box<dyn RngCore + Send>,
        mut clock: Box<dyn Clock>,
    ) -> Result<Self, StoreError> {
        let genesis = Project::genesis(
            boot.config.clone(),
            boot.master.clone(),
            &boot.master_name,
            &boot.master_password,
            clock.now(),
            &mut rng,
        )?;
        let (store, project) = EventStore::create(dir, &genesis)?;
        Ok(Self { project, store, rng, clock })
    }

    pub fn open(dir: &Path, rng: Box<dyn RngCore + Send>, clock: Box<dyn Clock>) -> Result<Self, StoreError> {
        let (store, project) = EventStore::open(dir)?;
        Ok(Self { project, store, rng, clock })
    }

    /// Opens `dir`, creating the project from `boot` if the store is empty.
    pub fn open_or_create(
        dir: &Path,
        boot: &Bootstrap,
        rng: Box<dyn RngCore + Send>,
        clock: Box<dyn Clock>,
    ) -> Result<Self, StoreError> {
        if EventStore::exists(dir) {
            Self::open(dir, rng, clock)
        } else {
            Self::create(dir, boot, rng, clock)
        }
    }

    /// Starts a new store holding an imported project state.
    pub fn import(
        dir: &Path,
        project: Project,
        rng: Box<dyn RngCore + Send>,
        clock: Box<dyn Clock>,
    ) -> Result<Self, StoreError> {
        let store = EventStore::create_from_state(dir, &project)?;
        Ok(Self { project, store, rng, clock })
    }

    /// Production defaults: OS-seeded randomness and the wall clock.
    pub fn system_parts() -> (Box<dyn RngCore + Send>, Box<dyn Clock>) {
        (Box::new(StdRng::from_os_rng()), Box::new(SystemClock))
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn store_mut(&mut self) -> &mut EventStore {
        &mut self.store
    }

    /// Decides, persists and applies one command. Returns only after the
    /// record is durable.
    pub fn execute(&mut self, actor: Option<&UserId>, command: Command) -> Result<Decision, StoreError> {
        let at = self.clock.now();
        let decision = self.project.decide(actor, command, at, &mut self.rng)?;
        self.store.append(&decision.record)?;
        self.project.apply(&decision.record);
        if self.store.snapshot_due() {
            self.store.snapshot(&self.project)?;
        }
        Ok(decision)
    }

    pub fn snapshot(&mut self) -> Result<(), StoreError> {
        self.store.snapshot(&self.project)
    }
}
