use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;

use super::StorageError;

/// Name of the log file inside a data directory.
pub const LOG_FILE: &str = "events.log";

/// Largest record the reader accepts; anything bigger is treated as damage.
const MAX_RECORD: u32 = 64 * 1024 * 1024;

/// One immutable entry of a stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredEvent {
    pub seq: u64,
    pub stream_id: String,
    pub kind: String,
    pub payload: Value,
    pub recorded_at: DateTime<Utc>,
}

/// What opening the log found on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Recovery {
    pub records: usize,
    /// Bytes of an incomplete trailing record that were cut off.
    pub truncated_bytes: u64,
}

struct Inner {
    file: File,
    events: Vec<StoredEvent>,
    streams: HashMap<String, Vec<usize>>,
}

/// Single-file append-only event log.
///
/// Record framing: 4-byte big-endian payload length, the payload (canonical
/// JSON of a [`StoredEvent`]), then the 4-byte big-endian CRC32 of the
/// payload. Every append is flushed to disk before it returns. Appends are
/// serialized by an internal lock; reads take the same lock briefly.
pub struct EventLog {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog").field("path", &self.path).finish()
    }
}

fn storage(path: &Path, e: impl std::fmt::Display) -> StorageError {
    StorageError::Io(format!("{}: {e}", path.display()))
}

/// Splits `bytes` into complete records. Returns the events and the offset
/// where the valid prefix ends. A damaged record that is not the last thing
/// in the file is corruption, not a torn write.
fn scan(path: &Path, bytes: &[u8]) -> Result<(Vec<StoredEvent>, usize), StorageError> {
    let mut events = Vec::new();
    let mut at = 0usize;
    while at < bytes.len() {
        let rest = &bytes[at..];
        if rest.len() < 4 {
            break;
        }
        let len = u32::from_be_bytes(rest[..4].try_into().expect("4 bytes"));
        if len > MAX_RECORD {
            return Err(StorageError::Corrupt(format!("record at byte {at} claims {len} bytes")));
        }
        let end = 4 + len as usize + 4;
        if rest.len() < end {
            break;
        }
        let payload = &rest[4..4 + len as usize];
        let crc = u32::from_be_bytes(rest[end - 4..end].try_into().expect("4 bytes"));
        if crc32fast::hash(payload) != crc {
            if rest.len() == end {
                break;
            }
            return Err(StorageError::Corrupt(format!(
                "{}: checksum mismatch in record at byte {at}",
                path.display()
            )));
        }
        let event: StoredEvent = serde_json::from_slice(payload)
            .map_err(|e| StorageError::Corrupt(format!("record at byte {at}: {e}")))?;
        events.push(event);
        at += end;
    }
    Ok((events, at))
}

fn frame(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 8);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_be_bytes());
    out
}

impl EventLog {
    /// Opens (or creates) the log at `path`, dropping a torn trailing record
    /// left by an interrupted append.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Recovery), StorageError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(|e| storage(&path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(|e| storage(&path, e))?;
        let (events, valid) = scan(&path, &bytes)?;
        let truncated = (bytes.len() - valid) as u64;
        if truncated > 0 {
            tracing::warn!(path = %path.display(), truncated, "dropping torn tail of event log");
            file.set_len(valid as u64).map_err(|e| storage(&path, e))?;
            file.sync_all().map_err(|e| storage(&path, e))?;
        }
        file.seek(SeekFrom::End(0)).map_err(|e| storage(&path, e))?;

        let mut streams: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in events.iter().enumerate() {
            let positions = streams.entry(e.stream_id.clone()).or_default();
            if e.seq != positions.len() as u64 + 1 {
                return Err(StorageError::Corrupt(format!(
                    "stream `{}` jumps to seq {} after {}",
                    e.stream_id,
                    e.seq,
                    positions.len()
                )));
            }
            positions.push(i);
        }
        let recovery = Recovery {
            records: events.len(),
            truncated_bytes: truncated,
        };
        let inner = Inner { file, events, streams };
        Ok((
            Self {
                path,
                inner: Mutex::new(inner),
            },
            recovery,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one event and returns its sequence number in the stream. The
    /// record is on disk when this returns.
    pub fn append(
        &self,
        stream_id: &str,
        kind: &str,
        payload: &Value,
        recorded_at: DateTime<Utc>,
    ) -> Result<u64, StorageError> {
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let seq = inner.streams.get(stream_id).map_or(0, Vec::len) as u64 + 1;
        let event = StoredEvent {
            seq,
            stream_id: stream_id.to_string(),
            kind: kind.to_string(),
            payload: payload.clone(),
            recorded_at,
        };
        let record = frame(canonical::to_string(&event).as_bytes());
        let before = inner.file.metadata().map_err(|e| storage(&self.path, e))?.len();
        let written = inner.file.write_all(&record).and_then(|_| inner.file.sync_data());
        if let Err(e) = written {
            // Leave no partial record behind for the next append to follow.
            let _ = inner.file.set_len(before);
            return Err(storage(&self.path, e));
        }
        let index = inner.events.len();
        inner.events.push(event);
        inner.streams.entry(stream_id.to_string()).or_default().push(index);
        Ok(seq)
    }

    /// Events of one stream in sequence order.
    pub fn stream(&self, stream_id: &str) -> Vec<StoredEvent> {
        let inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        inner
            .streams
            .get(stream_id)
            .map(|positions| positions.iter().map(|&i| inner.events[i].clone()).collect())
            .unwrap_or_default()
    }

    pub fn stream_len(&self, stream_id: &str) -> u64 {
        let inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        inner.streams.get(stream_id).map_or(0, Vec::len) as u64
    }

    /// Stream ids starting with `prefix`, in order of first appearance.
    pub fn streams_with_prefix(&self, prefix: &str) -> Vec<String> {
        let inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let mut found: Vec<(usize, &String)> = inner
            .streams
            .iter()
            .filter(|(id, _)| id.starts_with(prefix))
            .map(|(id, positions)| (positions[0], id))
            .collect();
        found.sort();
        found.into_iter().map(|(_, id)| id.clone()).collect()
    }

    /// Every event in write order.
    pub fn all(&self) -> Vec<StoredEvent> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).events.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
