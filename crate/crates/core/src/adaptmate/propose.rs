use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::CourseManifest;
use crate::domain::{
    next_session_id, resolve_local, serde_fmt, LearnerProfile, PlannedSession, StudyPlan,
};
use crate::planmate::{materialize, repair_plan, validate_plan, DraftDay, DraftSession, RepairOptions};
use crate::provider::payloads::{AdaptationOpPayload, AdaptationPayload};
use crate::provider::{complete_typed, Provider};

use super::ops::{apply_ops, diff_sessions, AdaptationOp, PlanChange, Rationale};
use super::{prompts, AdaptError, AdaptationSignal};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationProposal {
    pub proposal_id: String,
    pub plan_id: String,
    pub base_version: u32,
    pub created_at: DateTime<Utc>,
    pub changes: Vec<PlanChange>,
}

impl AdaptationProposal {
    pub fn ops(&self) -> impl Iterator<Item = &AdaptationOp> {
        self.changes.iter().map(|c| &c.op)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposeOptions {
    pub proposal_id: String,
    pub now: DateTime<Utc>,
    pub max_repair_rounds: u32,
}

const REPAIR_RATIONALE: &str = "Rescheduled so the plan stays feasible alongside the other changes.";

fn parse_date(text: &str) -> NaiveDate {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").expect("schema checks dates")
}

/// Converts agent ops into concrete ops against `plan`, in order. Problems
/// are reported as violation strings so they can feed a reformat retry.
fn concretize(
    payload: &AdaptationPayload,
    plan: &StudyPlan,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    signal_keys: &BTreeSet<String>,
    now: DateTime<Utc>,
) -> Result<Vec<PlanChange>, Vec<String>> {
    let mut problems = Vec::new();
    let mut working: Vec<PlannedSession> = plan.sessions.clone();
    let mut out = Vec::new();
    for (i, p) in payload.ops.iter().enumerate() {
        let at = |msg: String| format!("$.ops[{i}]: {msg}");
        for e in &p.evidence {
            if !signal_keys.contains(e) {
                problems.push(at(format!("evidence `{e}` does not name a signal element")));
            }
        }
        match concretize_op(p, &working, profile, manifest, now) {
            Ok(op) => {
                working = match apply_ops(&working, [&op]) {
                    Ok(next) => next,
                    Err(e) => {
                        problems.push(at(e.to_string()));
                        continue;
                    }
                };
                out.push(PlanChange {
                    op,
                    rationale: Rationale {
                        text: p.rationale.clone(),
                        evidence: p.evidence.clone(),
                    },
                });
            }
            Err(msg) => problems.push(at(msg)),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(problems)
    }
}

fn concretize_op(
    p: &AdaptationOpPayload,
    working: &[PlannedSession],
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    now: DateTime<Utc>,
) -> Result<AdaptationOp, String> {
    let existing = |id: &Option<String>| -> Result<&PlannedSession, String> {
        let id = id.as_deref().unwrap_or_default();
        let s = working
            .iter()
            .find(|s| s.session_id == id)
            .ok_or_else(|| format!("no session `{id}` in the plan"))?;
        if s.end <= now {
            return Err(format!("session `{id}` is already in the past"));
        }
        Ok(s)
    };
    let start_time = |p: &AdaptationOpPayload| {
        p.start_time
            .as_deref()
            .and_then(serde_fmt::parse_hhmm)
            .ok_or_else(|| "start_time is required".to_string())
    };
    match p.op.as_str() {
        "add_session" => {
            let lessons = p.lesson_ids.clone().unwrap_or_default();
            let unit_id = match &p.unit_id {
                Some(u) => u.clone(),
                None => lessons
                    .iter()
                    .find_map(|l| manifest.unit_of(l))
                    .map(|u| u.unit_id.clone())
                    .ok_or_else(|| "add_session needs a unit_id or known lessons".to_string())?,
            };
            let draft = DraftSession {
                session_id: None,
                title: p.title.clone(),
                day: DraftDay::Date(parse_date(p.date.as_deref().unwrap_or_default())),
                start_time: start_time(p)?,
                duration_minutes: p.duration_minutes.unwrap_or(profile.target_session_minutes()),
                unit_id,
                lesson_ids: lessons,
                objectives: p.objectives.clone(),
                tips: p.tips.clone(),
            };
            let mut session = materialize(&[draft], profile, now.date_naive(), 1)
                .map_err(|e| e.to_string())?
                .remove(0);
            if session.start < now {
                return Err("new sessions must start in the future".into());
            }
            session.session_id = next_session_id(working.iter().map(|s| s.session_id.as_str()));
            Ok(AdaptationOp::AddSession { session })
        }
        "remove_session" => Ok(AdaptationOp::RemoveSession {
            session_id: existing(&p.session_id)?.session_id.clone(),
        }),
        "move_session" => {
            let s = existing(&p.session_id)?;
            let tz = s.tz().ok_or_else(|| format!("session `{}` has no valid zone", s.session_id))?;
            let start = resolve_local(tz, parse_date(p.date.as_deref().unwrap_or_default()), start_time(p)?);
            let minutes = p.duration_minutes.map_or(s.duration_minutes(), i64::from);
            if start < now {
                return Err("sessions cannot move into the past".into());
            }
            Ok(AdaptationOp::MoveSession {
                session_id: s.session_id.clone(),
                start,
                end: start + Duration::minutes(minutes),
            })
        }
        "resize_session" => {
            let s = existing(&p.session_id)?;
            let minutes = i64::from(p.duration_minutes.unwrap_or_default());
            Ok(AdaptationOp::ResizeSession {
                session_id: s.session_id.clone(),
                end: s.start + Duration::minutes(minutes),
            })
        }
        "replace_content" => {
            let s = existing(&p.session_id)?;
            let lesson_ids = p.lesson_ids.clone().unwrap_or_default();
            let unit_id = p
                .unit_id
                .clone()
                .or_else(|| lesson_ids.iter().find_map(|l| manifest.unit_of(l)).map(|u| u.unit_id.clone()))
                .unwrap_or_else(|| s.unit_id.clone());
            Ok(AdaptationOp::ReplaceContent {
                session_id: s.session_id.clone(),
                unit_id,
                lesson_ids,
                title: p.title.clone().or_else(|| s.title.clone()),
                objectives: if p.objectives.is_empty() { s.objectives.clone() } else { p.objectives.clone() },
                tips: if p.tips.is_empty() { s.tips.clone() } else { p.tips.clone() },
            })
        }
        other => Err(format!("unknown op `{other}`")),
    }
}

/// Asks the Adaptation agent for plan changes, runs the changed plan through
/// validation and repair, and returns the changes that lead from `plan` to
/// the feasible result. A quiescent signal yields an empty proposal without
/// consulting the agent.
pub fn propose_adaptation(
    signal: &AdaptationSignal,
    plan: &StudyPlan,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    provider: &dyn Provider,
    options: &ProposeOptions,
) -> Result<AdaptationProposal, AdaptError> {
    let proposal = |changes| AdaptationProposal {
        proposal_id: options.proposal_id.clone(),
        plan_id: plan.plan_id.clone(),
        base_version: plan.version,
        created_at: options.now,
        changes,
    };
    if signal.plan_id != plan.plan_id || signal.plan_version != plan.version {
        return Err(AdaptError::LineageMismatch(format!(
            "signal is for {} v{}, plan head is {} v{}",
            signal.plan_id, signal.plan_version, plan.plan_id, plan.version
        )));
    }
    if signal.is_quiescent() {
        return Ok(proposal(Vec::new()));
    }

    let keys = signal.evidence_keys();
    let envelope = prompts::adaptation_envelope(signal, plan, profile, manifest, options.now);
    let payload: AdaptationPayload = complete_typed(provider, &envelope, |p: &AdaptationPayload| {
        concretize(p, plan, profile, manifest, &keys, options.now).err().unwrap_or_default()
    })?;
    let agent_changes = concretize(&payload, plan, profile, manifest, &keys, options.now)
        .expect("checked in the completion");

    let sessions = apply_ops(&plan.sessions, agent_changes.iter().map(|c| &c.op))?;
    let mut candidate = StudyPlan {
        sessions,
        ..plan.clone()
    };
    if !validate_plan(&candidate, profile, manifest).ok {
        candidate = repair_plan(
            &candidate,
            profile,
            manifest,
            provider,
            RepairOptions {
                max_rounds: options.max_repair_rounds,
                frozen_before: Some(options.now),
            },
        )?;
    }

    let by_session: BTreeMap<&str, &Rationale> =
        agent_changes.iter().map(|c| (c.op.session_id(), &c.rationale)).collect();
    let all_evidence: Vec<String> = agent_changes
        .iter()
        .flat_map(|c| c.rationale.evidence.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let changes = diff_sessions(&plan.sessions, &candidate.sessions)
        .into_iter()
        .map(|op| {
            let rationale = by_session.get(op.session_id()).map(|r| (*r).clone()).unwrap_or_else(|| Rationale {
                text: REPAIR_RATIONALE.to_string(),
                evidence: all_evidence.clone(),
            });
            PlanChange { op, rationale }
        })
        .collect();
    Ok(proposal(changes))
}

/// A proposal that repeats a session's content in a new session placed in
/// the first free availability window after the end of the plan.
pub fn relearn_proposal(
    plan: &StudyPlan,
    session_id: &str,
    profile: &LearnerProfile,
    proposal_id: &str,
    now: DateTime<Utc>,
) -> Result<AdaptationProposal, AdaptError> {
    let source = plan
        .session(session_id)
        .ok_or_else(|| AdaptError::invalid(format!("no session `{session_id}` in the plan")))?;
    let after = plan.sessions.iter().map(|s| s.end).max().unwrap_or(now).max(now);
    let windows = crate::planmate::availability_window(profile, after, after + Duration::days(28));
    let wanted = Duration::minutes(source.duration_minutes().min(i64::from(profile.max_session_minutes)));
    let min = Duration::minutes(i64::from(crate::domain::MIN_SESSION_MINUTES));
    let slot = windows.iter().find_map(|w| {
        let start = w.start.max(after);
        let end = (start + wanted).min(w.end);
        (end - start >= min).then_some((start, end, w.timezone.clone()))
    });
    let (start, end, timezone) =
        slot.ok_or_else(|| AdaptError::invalid("no free availability window in the next four weeks"))?;
    let mut session = source.clone();
    session.session_id = plan.next_session_id();
    session.start = start;
    session.end = end;
    session.timezone = timezone;
    session.title = Some(format!(
        "Relearn: {}",
        source.title.clone().unwrap_or_else(|| format!("Unit {}", source.unit_id))
    ));
    Ok(AdaptationProposal {
        proposal_id: proposal_id.to_string(),
        plan_id: plan.plan_id.clone(),
        base_version: plan.version,
        created_at: now,
        changes: vec![PlanChange {
            op: AdaptationOp::AddSession { session },
            rationale: Rationale {
                text: format!("You asked to study the material of session {session_id} again."),
                evidence: vec![format!("completion:{session_id}")],
            },
        }],
    })
}
