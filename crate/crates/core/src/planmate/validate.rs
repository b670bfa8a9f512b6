use std::collections::HashMap;

use chrono::{DateTime, Duration, NaiveDate, Utc};

use crate::corpus::CourseManifest;
use crate::domain::{
    normalize_availability_days, AvailabilityInterval, LearnerProfile, PlannedSession, StudyPlan,
    ValidationReport, Violation, ViolationCode,
};

/// Availability covering every session of `sessions`, with a day of slack on
/// each side for zone offsets. Windows with an unparseable zone contribute
/// nothing.
pub(crate) fn availability_around(
    profile: &LearnerProfile,
    sessions: &[PlannedSession],
) -> Vec<AvailabilityInterval> {
    let (Some(first), Some(last)) = (
        sessions.iter().map(|s| s.start).min(),
        sessions.iter().map(|s| s.end).max(),
    ) else {
        return Vec::new();
    };
    availability_between(profile, first, last)
}

pub(crate) fn availability_between(
    profile: &LearnerProfile,
    first: DateTime<Utc>,
    last: DateTime<Utc>,
) -> Vec<AvailabilityInterval> {
    let mut usable = profile.clone();
    usable.availability.retain(|w| crate::domain::parse_timezone(&w.timezone).is_ok());
    let from: NaiveDate = first.date_naive() - Duration::days(2);
    let days = (last.date_naive() - from).num_days() + 3;
    normalize_availability_days(&usable, from, days.max(0) as u32).expect("zones were filtered")
}

pub(crate) fn inside(intervals: &[AvailabilityInterval], start: DateTime<Utc>, end: DateTime<Utc>) -> bool {
    let idx = intervals.partition_point(|i| i.start <= start);
    idx > 0 && intervals[idx - 1].contains(start, end)
}

/// Checks a plan for feasibility against the learner's profile and the
/// course. Violations are reported in a stable order: per-session checks in
/// chronological order, then overlaps, then ordering.
pub fn validate_plan(plan: &StudyPlan, profile: &LearnerProfile, manifest: &CourseManifest) -> ValidationReport {
    let mut sessions: Vec<&PlannedSession> = plan.sessions.iter().collect();
    sessions.sort_by(|a, b| (a.start, a.end, &a.session_id).cmp(&(b.start, b.end, &b.session_id)));
    let intervals = availability_around(profile, &plan.sessions);
    let mut violations = Vec::new();

    for s in &sessions {
        let id = || vec![s.session_id.clone()];
        if manifest.unit(&s.unit_id).is_none() {
            violations.push(Violation::sessions(
                ViolationCode::UnknownLesson,
                id(),
                format!("unit `{}` is not in the course", s.unit_id),
            ));
        }
        if s.lesson_ids.is_empty() {
            violations.push(Violation::sessions(ViolationCode::UnknownLesson, id(), "session has no lessons"));
        }
        let stray: Vec<&str> = s
            .lesson_ids
            .iter()
            .filter(|l| manifest.unit_of(l).is_none_or(|u| u.unit_id != s.unit_id))
            .map(String::as_str)
            .collect();
        if !stray.is_empty() {
            violations.push(Violation::sessions(
                ViolationCode::UnknownLesson,
                id(),
                format!("lessons not in unit `{}`: {}", s.unit_id, stray.join(", ")),
            ));
        }
        if s.start >= s.end {
            violations.push(Violation::sessions(
                ViolationCode::OutsideAvailability,
                id(),
                "session ends before it starts",
            ));
        } else if !inside(&intervals, s.start, s.end) {
            violations.push(Violation::sessions(
                ViolationCode::OutsideAvailability,
                id(),
                format!(
                    "{} to {} is outside every availability window",
                    s.local_start().format("%a %Y-%m-%d %H:%M"),
                    s.local_end().format("%H:%M %Z")
                ),
            ));
        }
        if s.duration_minutes() > i64::from(profile.max_session_minutes) {
            violations.push(Violation::sessions(
                ViolationCode::TooLong,
                id(),
                format!(
                    "{} minutes exceeds the {} minute limit",
                    s.duration_minutes(),
                    profile.max_session_minutes
                ),
            ));
        }
    }

    for (i, a) in sessions.iter().enumerate() {
        for b in &sessions[i + 1..] {
            if b.start >= a.end {
                break;
            }
            if a.start < a.end && b.start < b.end {
                violations.push(Violation::sessions(
                    ViolationCode::Overlap,
                    vec![a.session_id.clone(), b.session_id.clone()],
                    format!("{} and {} overlap", a.session_id, b.session_id),
                ));
            }
        }
    }

    if profile.is_sequential() {
        violations.extend(order_violations(&sessions, manifest));
    }
    ValidationReport::from_violations(violations)
}

/// A lesson is out of order when it is first scheduled after a lesson that
/// comes later in the course. Revisiting an earlier lesson is allowed.
fn order_violations(sessions: &[&PlannedSession], manifest: &CourseManifest) -> Vec<Violation> {
    let positions = manifest.lesson_positions();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut furthest: Option<(usize, &str, &str)> = None;
    let mut out = Vec::new();
    for s in sessions {
        for lesson in &s.lesson_ids {
            let Some(&pos) = positions.get(lesson.as_str()) else {
                continue;
            };
            if seen.insert(lesson.as_str(), ()).is_some() {
                continue;
            }
            match furthest {
                Some((max, max_lesson, max_session)) if pos < max => {
                    out.push(Violation::sessions(
                        ViolationCode::OrderViolation,
                        vec![max_session.to_string(), s.session_id.clone()],
                        format!("`{lesson}` is first scheduled after the later lesson `{max_lesson}`"),
                    ));
                }
                Some((max, _, _)) if pos <= max => {}
                _ => furthest = Some((pos, lesson.as_str(), s.session_id.as_str())),
            }
        }
    }
    out
}
