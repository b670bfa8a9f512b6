use chrono::{DateTime, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Adapted,
    Undo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Initial => "initial",
            Provenance::Adapted => "adapted",
            Provenance::Undo => "undo",
        }
    }
}

/// One scheduled study slot. Instants are stored in UTC; `timezone` is the
/// learner's zone the slot was planned in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedSession {
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub timezone: String,
    pub unit_id: String,
    pub lesson_ids: Vec<String>,
    #[serde(default)]
    pub objectives: Vec<String>,
    #[serde(default)]
    pub tips: Vec<String>,
}

impl PlannedSession {
    pub fn duration_minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }

    pub fn tz(&self) -> Option<Tz> {
        self.timezone.parse().ok()
    }

    pub fn local_start(&self) -> DateTime<Tz> {
        self.start.with_timezone(&self.tz().unwrap_or(Tz::UTC))
    }

    pub fn local_end(&self) -> DateTime<Tz> {
        self.end.with_timezone(&self.tz().unwrap_or(Tz::UTC))
    }

    pub fn overlaps(&self, other: &PlannedSession) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub plan_id: String,
    pub learner_id: String,
    pub course_id: String,
    pub version: u32,
    pub parent_version: Option<u32>,
    pub provenance: Provenance,
    pub sessions: Vec<PlannedSession>,
    pub created_at: DateTime<Utc>,
}

impl StudyPlan {
    pub fn session(&self, session_id: &str) -> Option<&PlannedSession> {
        self.sessions.iter().find(|s| s.session_id == session_id)
    }

    /// Canonical bytes of the session list; equal content means equal bytes.
    pub fn content_bytes(&self) -> Vec<u8> {
        canonical::to_vec(&self.sessions)
    }

    /// Next `s{n}` identifier not used by this plan.
    pub fn next_session_id(&self) -> String {
        next_session_id(self.sessions.iter().map(|s| s.session_id.as_str()))
    }

    pub fn sort_sessions(&mut self) {
        self.sessions
            .sort_by(|a, b| (a.start, a.end, &a.session_id).cmp(&(b.start, b.end, &b.session_id)));
    }

    pub fn total_minutes(&self) -> i64 {
        self.sessions.iter().map(PlannedSession::duration_minutes).sum()
    }
}

pub(crate) fn next_session_id<'a>(ids: impl Iterator<Item = &'a str>) -> String {
    let max = ids
        .filter_map(|id| id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()))
        .max()
        .unwrap_or(0);
    format!("s{}", max + 1)
}
