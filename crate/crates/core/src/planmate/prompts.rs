use chrono::NaiveDate;
use serde_json::{json, Value};

use crate::corpus::CourseManifest;
use crate::domain::{serde_fmt, AvailabilityInterval, LearnerProfile, PlannedSession, StudyPlan, ValidationReport};
use crate::provider::payloads::SessionPayload;
use crate::provider::schema::ids;
use crate::provider::{AgentKind, ContextBlock, PromptEnvelope, TEMPLATE_VERSION};

/// Units and lessons in course order, without transcripts.
pub(crate) fn course_outline(manifest: &CourseManifest) -> Value {
    json!({
        "course_id": manifest.course_id,
        "title": manifest.title,
        "units": manifest.units.iter().map(|u| json!({
            "unit_id": u.unit_id,
            "title": u.title,
            "order": u.order,
            "lessons": u.lessons.iter().map(|l| json!({
                "lesson_id": l.lesson_id,
                "title": l.title,
                "est_minutes": l.est_minutes,
                "prerequisites": l.prerequisites,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// A session in the learner's local terms, as the agents read and write it.
pub(crate) fn session_payload(s: &PlannedSession) -> SessionPayload {
    let start = s.local_start();
    SessionPayload {
        session_id: Some(s.session_id.clone()),
        title: s.title.clone(),
        weekday: None,
        date: Some(start.date_naive().format("%Y-%m-%d").to_string()),
        start_time: serde_fmt::format_hhmm(start.time()),
        duration_minutes: s.duration_minutes().max(0) as u32,
        unit_id: s.unit_id.clone(),
        lesson_ids: s.lesson_ids.clone(),
        objectives: s.objectives.clone(),
        tips: s.tips.clone(),
    }
}

pub(crate) fn local_intervals(intervals: &[AvailabilityInterval]) -> Vec<Value> {
    intervals
        .iter()
        .map(|i| {
            let tz: chrono_tz::Tz = i.timezone.parse().unwrap_or(chrono_tz::Tz::UTC);
            let (s, e) = (i.start.with_timezone(&tz), i.end.with_timezone(&tz));
            json!({
                "date": s.date_naive().format("%Y-%m-%d").to_string(),
                "weekday": serde_fmt::weekday_name(chrono::Datelike::weekday(&s)),
                "start_time": serde_fmt::format_hhmm(s.time()),
                "end_time": serde_fmt::format_hhmm(e.time()),
                "minutes": i.minutes(),
                "timezone": i.timezone,
            })
        })
        .collect()
}

pub(crate) fn planner_envelope(
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    start_date: NaiveDate,
    horizon_days: u32,
) -> PromptEnvelope {
    let weekly_minutes: i64 = profile.availability.iter().map(|w| w.minutes().max(0)).sum();
    let target = weekly_minutes * i64::from(profile.pace.weekly_load_percent()) / 100;
    let window = json!({
        "start_date": start_date.format("%Y-%m-%d").to_string(),
        "horizon_days": horizon_days,
        "weekly_available_minutes": weekly_minutes,
        "weekly_target_minutes": target,
        "session_minutes": profile.target_session_minutes(),
        "max_session_minutes": profile.max_session_minutes,
    });
    PromptEnvelope::builder(AgentKind::Planner)
        .system(format!(
            "[{TEMPLATE_VERSION}] You are a study planner. Using the learner profile (goals, \
             availability, pace, learning path) and the course outline, draft a plan: a few \
             labelled week blocks with a short narrative, and a list of sessions. Each session \
             names a weekday or a date, a local start_time (HH:MM), duration_minutes, a unit_id, \
             the lesson_ids it covers from that unit, objectives and study tips. Keep sessions \
             inside the learner's weekly windows, no longer than max_session_minutes, and list \
             them in the order they should happen. Aim for roughly weekly_target_minutes of \
             study per week. Periodic review sessions are welcome. Reply with JSON only."
        ))
        .user(format!("Draft a study plan for this goal: {}", profile.goals.text))
        .block(ContextBlock::json("profile", profile))
        .block(ContextBlock::json("course_outline", &course_outline(manifest)))
        .block(ContextBlock::json("planning_window", &window))
        .schema(ids::PLAN_DRAFT)
        .build()
}

pub(crate) fn repair_envelope(
    plan: &StudyPlan,
    report: &ValidationReport,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    availability: &[AvailabilityInterval],
    frozen: &[PlannedSession],
) -> PromptEnvelope {
    let sessions: Vec<SessionPayload> = plan.sessions.iter().map(session_payload).collect();
    let frozen_ids: Vec<&str> = frozen.iter().map(|s| s.session_id.as_str()).collect();
    PromptEnvelope::builder(AgentKind::PlanRepair)
        .system(format!(
            "[{TEMPLATE_VERSION}] You fix study plans that break scheduling rules. Return the \
             complete corrected list of sessions, each with a date (YYYY-MM-DD), a local \
             start_time, duration_minutes, unit_id and lesson_ids. Keep session_id for sessions \
             you keep. Every session must fit inside one availability interval, must not overlap \
             another session, must not exceed max_session_minutes, and on a sequential path \
             lessons must first appear in course order. Do not change frozen sessions. Reply \
             with JSON only."
        ))
        .user("Repair this plan so that every violation is resolved.")
        .block(ContextBlock::json("plan", &sessions))
        .block(ContextBlock::json("violations", &report.violations))
        .block(ContextBlock::json("availability", &local_intervals(availability)))
        .block(ContextBlock::json("frozen_sessions", &frozen_ids))
        .block(ContextBlock::json("profile", profile))
        .block(ContextBlock::json("course_outline", &course_outline(manifest)))
        .schema(ids::PLAN_REPAIR)
        .build()
}
