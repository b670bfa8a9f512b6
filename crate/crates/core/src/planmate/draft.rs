use std::collections::HashSet;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, Utc, Weekday};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::domain::{
    normalize_availability_days, resolve_local, serde_fmt, AvailabilityInterval, LearnerProfile,
    PlannedSession,
};
use crate::provider::payloads::{PlanDraftPayload, SessionPayload};

use super::PlanError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekBlock {
    pub label: String,
    pub narrative: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DraftDay {
    #[serde(with = "serde_fmt::weekday")]
    Weekday(Weekday),
    Date(NaiveDate),
}

/// A session as the planner proposed it, before it is pinned to a date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftSession {
    pub session_id: Option<String>,
    pub title: Option<String>,
    pub day: DraftDay,
    #[serde(with = "serde_fmt::hhmm")]
    pub start_time: NaiveTime,
    pub duration_minutes: u32,
    pub unit_id: String,
    pub lesson_ids: Vec<String>,
    pub objectives: Vec<String>,
    pub tips: Vec<String>,
}

/// Stage-one planner output: narrative week blocks plus proposed sessions.
/// Drafts may be infeasible; feasibility is checked after materialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDraft {
    pub week_blocks: Vec<WeekBlock>,
    pub proposed_sessions: Vec<DraftSession>,
}

impl TryFrom<&SessionPayload> for DraftSession {
    type Error = String;

    fn try_from(p: &SessionPayload) -> Result<Self, String> {
        let day = match (&p.weekday, &p.date) {
            (Some(w), None) => DraftDay::Weekday(
                serde_fmt::parse_weekday(w).ok_or_else(|| format!("unknown weekday `{w}`"))?,
            ),
            (None, Some(d)) => DraftDay::Date(
                NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| format!("bad date `{d}`"))?,
            ),
            _ => return Err("exactly one of weekday or date is required".into()),
        };
        Ok(DraftSession {
            session_id: p.session_id.clone(),
            title: p.title.clone(),
            day,
            start_time: serde_fmt::parse_hhmm(&p.start_time)
                .ok_or_else(|| format!("bad start_time `{}`", p.start_time))?,
            duration_minutes: p.duration_minutes,
            unit_id: p.unit_id.clone(),
            lesson_ids: p.lesson_ids.clone(),
            objectives: p.objectives.clone(),
            tips: p.tips.clone(),
        })
    }
}

impl TryFrom<&PlanDraftPayload> for PlanDraft {
    type Error = String;

    fn try_from(p: &PlanDraftPayload) -> Result<Self, String> {
        Ok(PlanDraft {
            week_blocks: p
                .week_blocks
                .iter()
                .map(|b| WeekBlock {
                    label: b.label.clone(),
                    narrative: b.narrative.clone(),
                })
                .collect(),
            proposed_sessions: p
                .sessions
                .iter()
                .enumerate()
                .map(|(i, s)| DraftSession::try_from(s).map_err(|e| format!("$.sessions[{i}]: {e}")))
                .collect::<Result<_, _>>()?,
        })
    }
}

/// Zone a draft day is planned in: the first availability window on that
/// weekday, else the profile's first window.
fn zone_for(profile: &LearnerProfile, weekday: Weekday) -> Result<Tz, PlanError> {
    let window = profile
        .availability
        .iter()
        .find(|w| w.weekday == weekday)
        .or_else(|| profile.availability.first())
        .ok_or(PlanError::NoAvailability)?;
    Ok(crate::domain::parse_timezone(&window.timezone)?)
}

fn fits(intervals: &[AvailabilityInterval], start: DateTime<Utc>, end: DateTime<Utc>) -> bool {
    let idx = intervals.partition_point(|i| i.start <= start);
    idx > 0 && intervals[idx - 1].contains(start, end)
}

/// Pins draft sessions to concrete instants.
///
/// Weekday-relative sessions go to the earliest matching day on or after the
/// plan start date where the slot lies inside availability, does not overlap
/// an already placed session, and starts no earlier than the previous placed
/// session ended (so draft order is kept). When nothing fits, the first
/// order-preserving day is used and validation reports the problem. Dated
/// sessions are placed as given.
///
/// The result is sorted by start. Sessions keep a draft-supplied id when it
/// is unique; the rest get fresh `s{n}` ids in chronological order.
pub fn materialize(
    drafts: &[DraftSession],
    profile: &LearnerProfile,
    start_date: NaiveDate,
    horizon_days: u32,
) -> Result<Vec<PlannedSession>, PlanError> {
    if profile.availability.is_empty() {
        return Err(PlanError::NoAvailability);
    }
    let intervals = normalize_availability_days(profile, start_date, horizon_days)?;
    let last_date = start_date + Duration::days(i64::from(horizon_days));

    let mut placed: Vec<(PlannedSession, Option<String>)> = Vec::with_capacity(drafts.len());
    let mut cursor: Option<DateTime<Utc>> = None;
    for draft in drafts {
        let minutes = Duration::minutes(i64::from(draft.duration_minutes));
        let (tz, start) = match draft.day {
            DraftDay::Date(date) => {
                let tz = zone_for(profile, date.weekday())?;
                (tz, resolve_local(tz, date, draft.start_time))
            }
            DraftDay::Weekday(weekday) => {
                let tz = zone_for(profile, weekday)?;
                let mut first_ordered = None;
                let mut chosen = None;
                let mut date = start_date;
                while date <= last_date || first_ordered.is_none() {
                    if date.weekday() == weekday {
                        let s = resolve_local(tz, date, draft.start_time);
                        if cursor.is_none_or(|c| s >= c) {
                            first_ordered.get_or_insert(s);
                            let e = s + minutes;
                            let clear = placed.iter().all(|(p, _)| e <= p.start || p.end <= s);
                            if date <= last_date && clear && fits(&intervals, s, e) {
                                chosen = Some(s);
                                break;
                            }
                        }
                    }
                    date += Duration::days(1);
                }
                (tz, chosen.or(first_ordered).expect("loop runs until a candidate exists"))
            }
        };
        let end = start + minutes;
        cursor = Some(cursor.map_or(end, |c| c.max(end)));
        placed.push((
            PlannedSession {
                session_id: String::new(),
                title: draft.title.clone(),
                start,
                end,
                timezone: tz.name().to_string(),
                unit_id: draft.unit_id.clone(),
                lesson_ids: draft.lesson_ids.clone(),
                objectives: draft.objectives.clone(),
                tips: draft.tips.clone(),
            },
            draft.session_id.clone().filter(|id| !id.trim().is_empty()),
        ));
    }

    placed.sort_by_key(|a| (a.0.start, a.0.end));
    Ok(assign_ids(placed))
}

pub(crate) fn assign_ids(placed: Vec<(PlannedSession, Option<String>)>) -> Vec<PlannedSession> {
    let mut taken: HashSet<String> = HashSet::new();
    let mut keep = Vec::with_capacity(placed.len());
    for (_, requested) in &placed {
        match requested {
            Some(id) if taken.insert(id.clone()) => keep.push(true),
            _ => keep.push(false),
        }
    }
    placed
        .into_iter()
        .zip(keep)
        .map(|((mut session, requested), keep)| {
            session.session_id = if keep {
                requested.expect("kept ids are present")
            } else {
                let id = crate::domain::next_session_id(taken.iter().map(String::as_str));
                taken.insert(id.clone());
                id
            };
            session
        })
        .collect()
}
