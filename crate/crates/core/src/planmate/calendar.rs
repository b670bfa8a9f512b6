use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::CourseManifest;
use crate::domain::StudyPlan;

/// One calendar entry per planned session. `dtstart`/`dtend` are instants;
/// `timezone` is the zone they are rendered in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub uid: String,
    pub summary: String,
    pub dtstart: DateTime<Utc>,
    pub dtend: DateTime<Utc>,
    pub timezone: String,
    pub dtstamp: DateTime<Utc>,
    pub description: String,
    pub categories: Vec<String>,
}

pub fn event_uid(plan_id: &str, version: u32, session_id: &str) -> String {
    format!("{plan_id}-v{version}-{session_id}@learnmate")
}

/// Converts every session of `plan` to a calendar event, in session order.
pub fn plan_to_events(plan: &StudyPlan, manifest: &CourseManifest) -> Vec<CalendarEvent> {
    plan.sessions
        .iter()
        .map(|s| {
            let unit = manifest.unit(&s.unit_id);
            let summary = s.title.clone().unwrap_or_else(|| match unit {
                Some(u) => format!("Unit {}: {}", u.unit_id, u.title),
                None => format!("Unit {}", s.unit_id),
            });
            let lessons: Vec<&str> = s
                .lesson_ids
                .iter()
                .map(|id| manifest.lesson(id).map_or(id.as_str(), |l| l.title.as_str()))
                .collect();
            let mut description = format!("Lessons: {}", lessons.join("; "));
            if !s.objectives.is_empty() {
                description.push_str(&format!("\nObjectives: {}", s.objectives.join("; ")));
            }
            if !s.tips.is_empty() {
                description.push_str(&format!("\nTips: {}", s.tips.join("; ")));
            }
            CalendarEvent {
                uid: event_uid(&plan.plan_id, plan.version, &s.session_id),
                summary,
                dtstart: s.start,
                dtend: s.end,
                timezone: s.timezone.clone(),
                dtstamp: plan.created_at,
                description,
                categories: vec![plan.provenance.as_str().to_string(), format!("unit {}", s.unit_id)],
            }
        })
        .collect()
}
