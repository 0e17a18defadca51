//! Durable state: an engine plus the journal of commands that built it.
//!
//! Commands are applied in memory first; only successful commands are
//! journaled. Recovery loads the last snapshot and replays the journal
//! records it does not yet cover.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Command, Engine, Outcome, State};
use crate::error::Error;
use crate::ids::Timestamp;
use crate::journal::{Journal, Record};
use crate::redif::{collect_archive, ArchiveDescriptor, FetchError, IngestReport, ResourceFetcher};

pub const JOURNAL_FILE: &str = "journal.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("storage i/o: {0}")]
    Io(#[from] io::Error),
    #[error("storage corruption: {0}")]
    Corruption(String),
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    applied: u64,
    state: State,
}

#[derive(Debug)]
enum Backend {
    Memory,
    File { dir: PathBuf, journal: Journal },
}

#[derive(Debug)]
pub struct Store {
    engine: Engine,
    records: Vec<Record>,
    backend: Backend,
    base: State,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::in_memory_with(State::default())
    }

    /// In-memory store over a configured empty state.
    pub fn in_memory_with(base: State) -> Self {
        Store {
            engine: Engine::from_state(base.clone()),
            records: Vec::new(),
            backend: Backend::Memory,
            base,
        }
    }

    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        Self::open_with(dir, State::default())
    }

    /// Opens a file-backed store, recovering from snapshot plus journal.
    /// `base` is the empty state used when no snapshot exists.
    pub fn open_with(dir: &Path, base: State) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let (journal, records) = Journal::open(&dir.join(JOURNAL_FILE))?;
        let snap_path = dir.join(SNAPSHOT_FILE);
        let (applied, state) = match fs::read(&snap_path) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes)
                    .map_err(|e| StoreError::Corruption(format!("snapshot undecodable: {e}")))?;
                (snap.applied, snap.state)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => (0, base.clone()),
            Err(e) => return Err(e.into()),
        };
        if applied as usize > records.len() {
            return Err(StoreError::Corruption(format!(
                "snapshot covers {applied} records but journal holds {}",
                records.len()
            )));
        }
        let mut engine = Engine::from_state(state);
        for r in &records[applied as usize..] {
            engine.execute(&r.command, r.at).map_err(|e| {
                StoreError::Corruption(format!("record {} does not replay: {e}", r.seq))
            })?;
        }
        Ok(Store {
            engine,
            records,
            backend: Backend::File {
                dir: dir.to_path_buf(),
                journal,
            },
            base,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn state(&self) -> &State {
        self.engine.state()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn is_file_backed(&self) -> bool {
        matches!(self.backend, Backend::File { .. })
    }

    /// Applies `cmd` and, if it succeeds, makes it durable before returning.
    pub fn commit(&mut self, cmd: Command, at: Timestamp) -> Result<Outcome, StoreError> {
        let outcome = self.engine.execute(&cmd, at)?;
        let record = Record {
            seq: self.records.len() as u64 + 1,
            at,
            command: cmd,
        };
        if let Backend::File { journal, dir } = &mut self.backend {
            if let Err(e) = journal.append(&record) {
                let dir = dir.clone();
                log::error!("journal append failed: {e}; reloading from disk");
                *self = Store::open_with(&dir, self.base.clone())?;
                return Err(e.into());
            }
        }
        self.records.push(record);
        Ok(outcome)
    }

    /// Harvests an archive and commits the items that changed, if any.
    pub fn harvest(
        &mut self,
        desc: &ArchiveDescriptor,
        fetcher: &dyn ResourceFetcher,
        at: Timestamp,
    ) -> Result<IngestReport, HarvestError> {
        let (items, mut report) = collect_archive(desc, fetcher)?;
        let changed = self.engine.plan_upserts(items, &mut report);
        if !changed.is_empty() {
            self.commit(Command::UpsertItems { items: changed }, at)?;
        }
        Ok(report)
    }

    /// Writes the current state as the recovery base. No-op in memory.
    pub fn snapshot(&self) -> Result<(), StoreError> {
        let Backend::File { dir, .. } = &self.backend else {
            return Ok(());
        };
        let snap = Snapshot {
            applied: self.records.len() as u64,
            state: self.engine.state().clone(),
        };
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let bytes = serde_json::to_vec(&snap).expect("snapshot serializes");
        {
            let f = fs::File::create(&tmp)?;
            io::Write::write_all(&mut &f, &bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }

    /// Rebuilds state by replaying every journaled command from `base`.
    pub fn replay(base: State, records: &[Record]) -> Result<Engine, Error> {
        let mut engine = Engine::from_state(base);
        for r in records {
            engine.execute(&r.command, r.at)?;
        }
        Ok(engine)
    }
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Store(#[from] StoreError),
}
