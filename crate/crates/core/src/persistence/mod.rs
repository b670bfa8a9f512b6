//! Durable append-only storage. Everything the engine remembers lives in
//! one event log per data directory; state is rebuilt by replaying it.

mod log;
mod repo;

use thiserror::Error;

pub use log::{EventLog, Recovery, StoredEvent, LOG_FILE};
pub use repo::{
    course_stream, kinds, plan_stream, profile_stream, session_key, session_stream, split_session_key,
    DecisionEvent, Repository,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StorageError {
    #[error("storage failure: {0}")]
    Io(String),
    #[error("storage failure: corrupt log: {0}")]
    Corrupt(String),
    #[error("not found: {0}")]
    NotFound(String),
}
