use serde_json::json;

use crate::corpus::{format_timestamp, Corpus, CourseManifest};
use crate::domain::{LearnerProfile, PlannedSession};
use crate::provider::schema::ids;
use crate::provider::{AgentKind, ContextBlock, PromptEnvelope, TEMPLATE_VERSION};

use super::{GroundedAnswer, ScopeFlag, Tier};

pub(crate) fn segment_block(corpus: &Corpus, lesson_id: &str, cue_index: usize) -> Option<ContextBlock> {
    let cue = corpus.cue(lesson_id, cue_index)?;
    Some(ContextBlock::json(
        format!("segment:{lesson_id}#{cue_index}"),
        &json!({
            "lesson_id": lesson_id,
            "cue_index": cue_index,
            "timestamp": format_timestamp(cue.start_ms),
            "text": cue.text,
        }),
    ))
}

pub(crate) fn session_block(session: &PlannedSession, manifest: &CourseManifest) -> ContextBlock {
    let unit_title = manifest.unit(&session.unit_id).map(|u| u.title.as_str()).unwrap_or("");
    let lessons: Vec<_> = session
        .lesson_ids
        .iter()
        .map(|id| {
            json!({
                "lesson_id": id,
                "title": manifest.lesson(id).map(|l| l.title.as_str()).unwrap_or(""),
            })
        })
        .collect();
    ContextBlock::json(
        "session",
        &json!({
            "session_id": session.session_id,
            "title": session.title,
            "unit_id": session.unit_id,
            "unit_title": unit_title,
            "lessons": lessons,
            "objectives": session.objectives,
            "tips": session.tips,
            "duration_minutes": session.duration_minutes(),
        }),
    )
}

pub(crate) fn guidance_envelope(
    session: &PlannedSession,
    manifest: &CourseManifest,
    profile: &LearnerProfile,
) -> PromptEnvelope {
    let preferences = json!({
        "goals": profile.goals,
        "pace": profile.pace,
        "path": profile.path,
        "max_session_minutes": profile.max_session_minutes,
    });
    PromptEnvelope::builder(AgentKind::QA)
        .system(format!(
            "[{TEMPLATE_VERSION}] You are a study companion opening a study session. Write short \
             guidance for this session: what to watch for in its lessons, how it serves the \
             learner's goal, and how to pace the time. Add up to four focus points. Reply with \
             JSON only."
        ))
        .user("Give me guidance for this study session.")
        .block(session_block(session, manifest))
        .block(ContextBlock::json("preferences", &preferences))
        .schema(ids::GUIDANCE)
        .build()
}

pub(crate) fn qa_envelope(
    question: &str,
    scope: ScopeFlag,
    session: &PlannedSession,
    manifest: &CourseManifest,
    segments: Vec<ContextBlock>,
) -> PromptEnvelope {
    let rule = match scope {
        ScopeFlag::InScope => {
            "Answer concisely using only the transcript segments provided, and mention the \
             timestamps you rely on."
        }
        ScopeFlag::OutOfScope => {
            "The question is not covered by this session's lessons. Give a brief general answer \
             and suggest how it might connect to the course, without inventing course content."
        }
    };
    let mut builder = PromptEnvelope::builder(AgentKind::QA)
        .system(format!(
            "[{TEMPLATE_VERSION}] You answer a learner's question during a study session. {rule} \
             Reply with JSON only."
        ))
        .user(question)
        .block(session_block(session, manifest));
    for block in segments {
        builder = builder.block(block);
    }
    builder.schema(ids::QA_ANSWER).build()
}

pub(crate) fn tier_envelope(
    tier: Tier,
    answer: &GroundedAnswer,
    session: &PlannedSession,
    manifest: &CourseManifest,
    corpus: &Corpus,
) -> PromptEnvelope {
    let (instruction, schema) = match tier {
        Tier::MoreDetails => (
            "Expand the answer with a fuller explanation that builds on it and on any earlier \
             layers.",
            ids::TIER_DETAILS,
        ),
        Tier::PracticeQuestions => (
            "Write practice multiple-choice questions on the answer, each with exactly four \
             options, the index of the correct one, and a short concept tag.",
            ids::TIER_PRACTICE,
        ),
        Tier::ExternalResources => (
            "Suggest a few external resources (url and label) for further study of the answer.",
            ids::TIER_RESOURCES,
        ),
    };
    let mut builder = PromptEnvelope::builder(AgentKind::TierExpand)
        .system(format!(
            "[{TEMPLATE_VERSION}] You deepen an answer one layer at a time. {instruction} Reply \
             with JSON only."
        ))
        .user(format!("Expand the answer: {}", tier.as_str()))
        .block(session_block(session, manifest))
        .block(ContextBlock::new("question", answer.question.clone()))
        .block(ContextBlock::new("answer", answer.text.clone()));
    for (filled, content) in &answer.expansions {
        builder = builder.block(ContextBlock::json(format!("tier:{}", filled.as_str()), content));
    }
    for c in &answer.citations {
        if let Some(block) = segment_block(corpus, &c.lesson_id, c.cue_index) {
            builder = builder.block(block);
        }
    }
    builder.schema(schema).build()
}

pub(crate) fn quiz_envelope(
    session: &PlannedSession,
    manifest: &CourseManifest,
    corpus: &Corpus,
    questions_asked: &[String],
    count: usize,
) -> PromptEnvelope {
    let mut builder = PromptEnvelope::builder(AgentKind::QuizGen)
        .system(format!(
            "[{TEMPLATE_VERSION}] You write the end-of-session quiz. Create exactly {count} \
             multiple-choice questions on the material covered, each with exactly four options, \
             the index of the correct option, a short concept tag, and the transcript segments \
             (lesson_id and cue_index) it is based on. Favour topics the learner asked about. \
             Reply with JSON only."
        ))
        .user(format!("Create a {count}-question quiz for this session."))
        .block(session_block(session, manifest))
        .block(ContextBlock::json("questions_asked", questions_asked));
    for lesson in &session.lesson_ids {
        if let Some(t) = corpus.transcript(lesson) {
            for i in 0..t.cues.len() {
                builder = builder.block(segment_block(corpus, lesson, i).expect("cue exists"));
            }
        }
    }
    builder.schema(ids::QUIZ).build()
}
