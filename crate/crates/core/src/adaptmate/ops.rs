use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::PlannedSession;

use super::AdaptError;

/// One edit to a plan's session list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AdaptationOp {
    AddSession {
        session: PlannedSession,
    },
    RemoveSession {
        session_id: String,
    },
    MoveSession {
        session_id: String,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    ResizeSession {
        session_id: String,
        end: DateTime<Utc>,
    },
    ReplaceContent {
        session_id: String,
        unit_id: String,
        lesson_ids: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        title: Option<String>,
        #[serde(default)]
        objectives: Vec<String>,
        #[serde(default)]
        tips: Vec<String>,
    },
}

impl AdaptationOp {
    /// Session the op touches; for an add, the new session's id.
    pub fn session_id(&self) -> &str {
        match self {
            AdaptationOp::AddSession { session } => &session.session_id,
            AdaptationOp::RemoveSession { session_id }
            | AdaptationOp::MoveSession { session_id, .. }
            | AdaptationOp::ResizeSession { session_id, .. }
            | AdaptationOp::ReplaceContent { session_id, .. } => session_id,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdaptationOp::AddSession { .. } => "add_session",
            AdaptationOp::RemoveSession { .. } => "remove_session",
            AdaptationOp::MoveSession { .. } => "move_session",
            AdaptationOp::ResizeSession { .. } => "resize_session",
            AdaptationOp::ReplaceContent { .. } => "replace_content",
        }
    }
}

/// Why a change is proposed, and which signal elements support it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub text: String,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanChange {
    #[serde(flatten)]
    pub op: AdaptationOp,
    pub rationale: Rationale,
}

/// Applies ops in list order. The result is sorted chronologically.
pub fn apply_ops<'a>(
    sessions: &[PlannedSession],
    ops: impl IntoIterator<Item = &'a AdaptationOp>,
) -> Result<Vec<PlannedSession>, AdaptError> {
    let mut out: Vec<PlannedSession> = sessions.to_vec();
    for op in ops {
        let find = |out: &mut Vec<PlannedSession>, id: &str| -> Result<usize, AdaptError> {
            out.iter()
                .position(|s| s.session_id == id)
                .ok_or_else(|| AdaptError::invalid(format!("{}: no session `{id}`", op.name())))
        };
        match op {
            AdaptationOp::AddSession { session } => {
                if out.iter().any(|s| s.session_id == session.session_id) {
                    return Err(AdaptError::invalid(format!(
                        "add_session: id `{}` is already used",
                        session.session_id
                    )));
                }
                out.push(session.clone());
            }
            AdaptationOp::RemoveSession { session_id } => {
                let i = find(&mut out, session_id)?;
                out.remove(i);
            }
            AdaptationOp::MoveSession { session_id, start, end } => {
                let i = find(&mut out, session_id)?;
                out[i].start = *start;
                out[i].end = *end;
            }
            AdaptationOp::ResizeSession { session_id, end } => {
                let i = find(&mut out, session_id)?;
                out[i].end = *end;
            }
            AdaptationOp::ReplaceContent {
                session_id,
                unit_id,
                lesson_ids,
                title,
                objectives,
                tips,
            } => {
                let i = find(&mut out, session_id)?;
                let s = &mut out[i];
                s.unit_id = unit_id.clone();
                s.lesson_ids = lesson_ids.clone();
                s.title = title.clone();
                s.objectives = objectives.clone();
                s.tips = tips.clone();
            }
        }
    }
    out.sort_by(|a, b| (a.start, a.end, &a.session_id).cmp(&(b.start, b.end, &b.session_id)));
    Ok(out)
}

fn same_content(a: &PlannedSession, b: &PlannedSession) -> bool {
    a.unit_id == b.unit_id
        && a.lesson_ids == b.lesson_ids
        && a.title == b.title
        && a.objectives == b.objectives
        && a.tips == b.tips
}

/// Ops that turn `base` into `target`: removals, then time changes, then
/// content changes, then additions, each group in session order.
pub fn diff_sessions(base: &[PlannedSession], target: &[PlannedSession]) -> Vec<AdaptationOp> {
    let base_by_id: BTreeMap<&str, &PlannedSession> = base.iter().map(|s| (s.session_id.as_str(), s)).collect();
    let target_ids: HashSet<&str> = target.iter().map(|s| s.session_id.as_str()).collect();
    let mut removes = Vec::new();
    let mut times = Vec::new();
    let mut contents = Vec::new();
    let mut adds = Vec::new();

    for s in base {
        if !target_ids.contains(s.session_id.as_str()) {
            removes.push(AdaptationOp::RemoveSession {
                session_id: s.session_id.clone(),
            });
        }
    }
    for t in target {
        let Some(b) = base_by_id.get(t.session_id.as_str()) else {
            adds.push(AdaptationOp::AddSession { session: t.clone() });
            continue;
        };
        if b.timezone != t.timezone {
            // Zones are fixed per session; a zone change is a replacement.
            removes.push(AdaptationOp::RemoveSession {
                session_id: b.session_id.clone(),
            });
            adds.push(AdaptationOp::AddSession { session: t.clone() });
            continue;
        }
        if b.start != t.start {
            times.push(AdaptationOp::MoveSession {
                session_id: t.session_id.clone(),
                start: t.start,
                end: t.end,
            });
        } else if b.end != t.end {
            times.push(AdaptationOp::ResizeSession {
                session_id: t.session_id.clone(),
                end: t.end,
            });
        }
        if !same_content(b, t) {
            contents.push(AdaptationOp::ReplaceContent {
                session_id: t.session_id.clone(),
                unit_id: t.unit_id.clone(),
                lesson_ids: t.lesson_ids.clone(),
                title: t.title.clone(),
                objectives: t.objectives.clone(),
                tips: t.tips.clone(),
            });
        }
    }
    removes.into_iter().chain(times).chain(contents).chain(adds).collect()
}
