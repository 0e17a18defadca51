//! Append-only command journal.
//!
//! Each record is framed as `[len: u32 LE][crc32: u32 LE][json payload]`.
//! Opening a journal whose tail is torn or fails its checksum truncates the
//! file back to the last valid record and logs a warning.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::Command;
use crate::ids::Timestamp;

const HEADER: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    pub at: Timestamp,
    pub command: Command,
}

impl Record {
    pub fn encode(&self) -> Vec<u8> {
        let payload = serde_json::to_vec(self).expect("record serializes");
        let mut buf = Vec::with_capacity(HEADER + payload.len());
        buf.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        buf.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        buf.extend_from_slice(&payload);
        buf
    }
}

/// Result of scanning raw journal bytes.
#[derive(Debug, Default)]
pub struct Scan {
    pub records: Vec<Record>,
    /// Byte length of the valid prefix.
    pub valid_len: u64,
    /// Why scanning stopped early, if it did.
    pub damage: Option<String>,
}

/// Decodes as many whole, checksummed records as `bytes` holds.
pub fn scan(bytes: &[u8]) -> Scan {
    let mut out = Scan::default();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let rest = &bytes[pos..];
        if rest.len() < HEADER {
            out.damage = Some(format!("torn header at byte {pos}"));
            break;
        }
        let len = u32::from_le_bytes(rest[0..4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(rest[4..8].try_into().unwrap());
        let Some(payload) = rest.get(HEADER..HEADER + len) else {
            out.damage = Some(format!("torn record at byte {pos}"));
            break;
        };
        if crc32fast::hash(payload) != crc {
            out.damage = Some(format!("checksum mismatch at byte {pos}"));
            break;
        }
        match serde_json::from_slice::<Record>(payload) {
            Ok(r) => out.records.push(r),
            Err(e) => {
                out.damage = Some(format!("undecodable record at byte {pos}: {e}"));
                break;
            }
        }
        pos += HEADER + len;
        out.valid_len = pos as u64;
    }
    out
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens (creating if needed) and returns the intact records.
    pub fn open(path: &Path) -> io::Result<(Journal, Vec<Record>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let scan = scan(&bytes);
        if let Some(damage) = &scan.damage {
            log::warn!(
                "journal {}: {damage}; truncating {} trailing bytes",
                path.display(),
                bytes.len() as u64 - scan.valid_len
            );
            file.set_len(scan.valid_len)?;
            file.sync_data()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((
            Journal {
                path: path.to_path_buf(),
                file,
            },
            scan.records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and waits for it to reach the disk.
    pub fn append(&mut self, record: &Record) -> io::Result<()> {
        self.file.write_all(&record.encode())?;
        self.file.sync_data()
    }
}
