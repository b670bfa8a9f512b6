use std::collections::HashSet;

use chrono::{DateTime, Duration, NaiveTime, Utc};

use crate::corpus::CourseManifest;
use crate::domain::{
    resolve_local, AvailabilityInterval, LearnerProfile, PlannedSession, StudyPlan, ValidationReport,
    ViolationCode, MIN_SESSION_MINUTES,
};
use crate::provider::payloads::PlanRepairPayload;
use crate::provider::{complete_typed, Provider};

use super::draft::{assign_ids, materialize, DraftDay, DraftSession};
use super::validate::{availability_around, availability_between, inside};
use super::{prompts, validate_plan, PlanError};

pub const DEFAULT_MAX_REPAIR_ROUNDS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairOptions {
    /// Number of PlanRepair agent consultations before giving up.
    pub max_rounds: u32,
    /// Sessions ending at or before this instant are never changed.
    pub frozen_before: Option<DateTime<Utc>>,
}

impl Default for RepairOptions {
    fn default() -> Self {
        Self {
            max_rounds: DEFAULT_MAX_REPAIR_ROUNDS,
            frozen_before: None,
        }
    }
}

fn is_frozen(session: &PlannedSession, frozen_before: Option<DateTime<Utc>>) -> bool {
    frozen_before.is_some_and(|t| session.end <= t)
}

/// Brings an infeasible plan back to feasibility.
///
/// Cheap deterministic fixes run first. Whatever they cannot resolve goes to
/// the PlanRepair agent together with the remaining violations, for at most
/// `options.max_rounds` rounds.
pub fn repair_plan(
    plan: &StudyPlan,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    provider: &dyn Provider,
    options: RepairOptions,
) -> Result<StudyPlan, PlanError> {
    let mut current = repair_deterministic(plan, profile, manifest, options.frozen_before);
    let mut report = validate_plan(&current, profile, manifest);
    let mut rounds = 0;
    while !report.ok {
        if rounds == options.max_rounds {
            tracing::warn!(plan_id = %plan.plan_id, rounds, "plan repair exhausted");
            return Err(PlanError::RepairExhausted(report));
        }
        rounds += 1;
        current = agent_round(&current, &report, profile, manifest, provider, options.frozen_before)?;
        current = repair_deterministic(&current, profile, manifest, options.frozen_before);
        report = validate_plan(&current, profile, manifest);
    }
    Ok(current)
}

fn agent_round(
    plan: &StudyPlan,
    report: &ValidationReport,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    provider: &dyn Provider,
    frozen_before: Option<DateTime<Utc>>,
) -> Result<StudyPlan, PlanError> {
    let (frozen, open): (Vec<_>, Vec<_>) =
        plan.sessions.iter().cloned().partition(|s| is_frozen(s, frozen_before));
    let horizon_end = plan.sessions.iter().map(|s| s.end).max().unwrap_or(plan.created_at) + Duration::days(14);
    let horizon_start = frozen_before.unwrap_or(plan.created_at).min(
        open.iter().map(|s| s.start).min().unwrap_or(plan.created_at),
    );
    let availability = availability_between(profile, horizon_start, horizon_end);
    let envelope = prompts::repair_envelope(plan, report, profile, manifest, &availability, &frozen);

    let frozen_ids: HashSet<&str> = frozen.iter().map(|s| s.session_id.as_str()).collect();
    let payload: PlanRepairPayload = complete_typed(provider, &envelope, |p: &PlanRepairPayload| {
        p.sessions
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match DraftSession::try_from(s) {
                Err(e) => Some(format!("$.sessions[{i}]: {e}")),
                Ok(d) if !matches!(d.day, DraftDay::Date(_)) => {
                    Some(format!("$.sessions[{i}]: repaired sessions must give a date"))
                }
                Ok(_) => None,
            })
            .collect()
    })?;

    let drafts: Vec<DraftSession> = payload
        .sessions
        .iter()
        .map(|s| DraftSession::try_from(s).expect("checked in the completion"))
        .filter(|d| d.session_id.as_deref().is_none_or(|id| !frozen_ids.contains(id)))
        .collect();
    let first_date = plan.created_at.date_naive();
    let placed = materialize(&drafts, profile, first_date, 1)?;

    let mut combined: Vec<(PlannedSession, Option<String>)> = frozen
        .into_iter()
        .map(|s| {
            let id = s.session_id.clone();
            (s, Some(id))
        })
        .collect();
    combined.extend(placed.into_iter().map(|s| {
        let id = s.session_id.clone();
        (s, Some(id))
    }));
    // Ids fresh from `materialize` may collide with frozen ones; frozen
    // entries come first and win.
    let mut sessions = assign_ids(combined);
    sessions.sort_by(|a, b| (a.start, a.end, &a.session_id).cmp(&(b.start, b.end, &b.session_id)));
    Ok(StudyPlan {
        sessions,
        ..plan.clone()
    })
}

/// Applies the rule-based fixes: content cleanup, clipping to the length
/// limit, clipping or shifting into availability on the same local day, and
/// reordering content blocks on a sequential path.
pub fn repair_deterministic(
    plan: &StudyPlan,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    frozen_before: Option<DateTime<Utc>>,
) -> StudyPlan {
    let mut plan = plan.clone();
    plan.sort_sessions();
    let max = Duration::minutes(i64::from(profile.max_session_minutes));

    for s in plan.sessions.iter_mut().filter(|s| !is_frozen(s, frozen_before)) {
        clean_content(s, manifest);
        if s.end - s.start > max {
            s.end = s.start + max;
        }
    }

    let intervals = availability_around(profile, &plan.sessions);
    let mut settled: Vec<(DateTime<Utc>, DateTime<Utc>)> = plan
        .sessions
        .iter()
        .filter(|s| is_frozen(s, frozen_before))
        .map(|s| (s.start, s.end))
        .collect();
    for s in plan.sessions.iter_mut().filter(|s| !is_frozen(s, frozen_before)) {
        let clear = |start, end, settled: &[(DateTime<Utc>, DateTime<Utc>)]| {
            settled.iter().all(|&(a, b)| end <= a || b <= start)
        };
        if s.start < s.end && inside(&intervals, s.start, s.end) && clear(s.start, s.end, &settled) {
            settled.push((s.start, s.end));
            continue;
        }
        if let Some((start, end)) = clip_to_window(s, &intervals).filter(|&(a, b)| clear(a, b, &settled)) {
            s.start = start;
            s.end = end;
        } else if let Some((start, end)) = same_day_slot(s, &intervals, &settled) {
            s.start = start;
            s.end = end;
        }
        settled.push((s.start, s.end));
    }
    plan.sort_sessions();

    if profile.is_sequential() && validate_plan(&plan, profile, manifest).has(ViolationCode::OrderViolation) {
        reorder_content(&mut plan, manifest, frozen_before);
    }
    plan
}

fn clean_content(session: &mut PlannedSession, manifest: &CourseManifest) {
    if manifest.unit(&session.unit_id).is_none() {
        if let Some(unit) = session.lesson_ids.iter().find_map(|l| manifest.unit_of(l)) {
            session.unit_id = unit.unit_id.clone();
        }
    }
    let mut seen = HashSet::new();
    let unit_id = session.unit_id.clone();
    session.lesson_ids.retain(|l| {
        manifest.unit_of(l).is_some_and(|u| u.unit_id == unit_id) && seen.insert(l.clone())
    });
}

/// Ends the session at the close of the window it starts in, when that
/// leaves at least the minimum session length.
fn clip_to_window(
    session: &PlannedSession,
    intervals: &[AvailabilityInterval],
) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
    let idx = intervals.partition_point(|i| i.start <= session.start);
    let window = intervals.get(idx.checked_sub(1)?)?;
    let fits = session.start < window.end
        && window.end < session.end
        && window.end - session.start >= Duration::minutes(i64::from(MIN_SESSION_MINUTES));
    fits.then_some((session.start, window.end))
}

/// Earliest free stretch on the session's local day that holds the whole
/// session; failing that, the longest one of at least the minimum length.
fn same_day_slot(
    session: &PlannedSession,
    intervals: &[AvailabilityInterval],
    settled: &[(DateTime<Utc>, DateTime<Utc>)],
) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
    let tz = session.tz()?;
    let day = session.local_start().date_naive();
    let day_start = resolve_local(tz, day, NaiveTime::MIN);
    let day_end = resolve_local(tz, day + Duration::days(1), NaiveTime::MIN);
    let wanted = (session.end - session.start).max(Duration::minutes(i64::from(MIN_SESSION_MINUTES)));

    let mut busy: Vec<_> = settled.to_vec();
    busy.sort();
    let mut best: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
    for window in intervals {
        let (lo, hi) = (window.start.max(day_start), window.end.min(day_end));
        if lo >= hi {
            continue;
        }
        let mut cursor = lo;
        for &(a, b) in busy.iter().chain(std::iter::once(&(hi, hi))) {
            if b <= cursor {
                continue;
            }
            let gap_end = a.min(hi);
            if gap_end > cursor {
                if gap_end - cursor >= wanted {
                    return Some((cursor, cursor + wanted));
                }
                if best.is_none_or(|(x, y)| gap_end - cursor > y - x) {
                    best = Some((cursor, gap_end));
                }
            }
            if a >= hi {
                break;
            }
            cursor = cursor.max(b);
        }
    }
    best.filter(|(a, b)| *b - *a >= Duration::minutes(i64::from(MIN_SESSION_MINUTES)))
}

/// Reassigns content blocks among the movable sessions so earlier course
/// material comes first. Slots stay where they are; titles, objectives and
/// tips travel with their lessons.
fn reorder_content(plan: &mut StudyPlan, manifest: &CourseManifest, frozen_before: Option<DateTime<Utc>>) {
    let positions = manifest.lesson_positions();
    let key = |s: &PlannedSession| {
        let ps: Vec<usize> = s.lesson_ids.iter().filter_map(|l| positions.get(l.as_str()).copied()).collect();
        (
            ps.iter().min().copied().unwrap_or(usize::MAX),
            ps.iter().max().copied().unwrap_or(usize::MAX),
        )
    };
    let slots: Vec<usize> = (0..plan.sessions.len())
        .filter(|&i| !is_frozen(&plan.sessions[i], frozen_before))
        .collect();
    let mut blocks: Vec<PlannedSession> = slots.iter().map(|&i| plan.sessions[i].clone()).collect();
    blocks.sort_by_key(|b| key(b));
    for (&slot, block) in slots.iter().zip(blocks) {
        let target = &mut plan.sessions[slot];
        target.title = block.title;
        target.unit_id = block.unit_id;
        target.lesson_ids = block.lesson_ids;
        target.objectives = block.objectives;
        target.tips = block.tips;
    }
}
