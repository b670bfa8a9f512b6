use chrono::{DateTime, Duration, Utc};
use serde_json::json;

use crate::corpus::CourseManifest;
use crate::domain::{LearnerProfile, StudyPlan};
use crate::planmate::prompts::{course_outline, local_intervals, session_payload};
use crate::provider::payloads::SessionPayload;
use crate::provider::schema::ids;
use crate::provider::{AgentKind, ContextBlock, PromptEnvelope, TEMPLATE_VERSION};

use super::AdaptationSignal;

pub(crate) fn adaptation_envelope(
    signal: &AdaptationSignal,
    plan: &StudyPlan,
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    now: DateTime<Utc>,
) -> PromptEnvelope {
    let sessions: Vec<SessionPayload> = plan.sessions.iter().map(session_payload).collect();
    let horizon_end = plan.sessions.iter().map(|s| s.end).max().unwrap_or(now).max(now) + Duration::days(14);
    let availability = crate::planmate::availability_window(profile, now, horizon_end);
    let evidence: Vec<String> = signal.evidence_keys().into_iter().collect();
    PromptEnvelope::builder(AgentKind::Adaptation)
        .system(format!(
            "[{TEMPLATE_VERSION}] You adjust a study plan after a study session. Propose a small \
             list of ops (add_session, remove_session, move_session, resize_session, \
             replace_content) that respond to the signal: add targeted review for weak \
             concepts, give more time where the learner asked many questions or ran over, and \
             reschedule abandoned material. Only touch sessions that have not happened yet, \
             keep new or moved sessions inside the availability intervals, and never change the \
             learner's preferences. Every op needs a rationale and evidence drawn from \
             evidence_keys. Reply with JSON only."
        ))
        .user("Generate an adjusted plan.")
        .block(ContextBlock::json("signal", signal))
        .block(ContextBlock::json("evidence_keys", &evidence))
        .block(ContextBlock::json("plan", &sessions))
        .block(ContextBlock::json("availability", &local_intervals(&availability)))
        .block(ContextBlock::json(
            "now",
            &json!({ "utc": now.format("%Y-%m-%dT%H:%M:%SZ").to_string() }),
        ))
        .block(ContextBlock::json("course_outline", &course_outline(manifest)))
        .schema(ids::ADAPTATION)
        .build()
}
