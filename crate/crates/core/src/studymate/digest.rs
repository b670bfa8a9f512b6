use serde::{Deserialize, Serialize};

use crate::corpus::{format_timestamp, CourseManifest};

use super::{ScopeFlag, SessionContext, SessionState, StudyError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestLesson {
    pub lesson_id: String,
    pub title: String,
}

/// End-of-session summary built only from logged data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDigest {
    pub session_id: String,
    pub completed: bool,
    pub heading: String,
    pub lessons: Vec<DigestLesson>,
    pub questions: Vec<String>,
    pub score_display: Option<String>,
    pub weak_concepts: Vec<String>,
    pub next_step: String,
    pub text: String,
}

/// Summarizes a finished session: lessons covered, questions asked, score
/// and a suggested next step. Deterministic over the context.
pub fn session_digest(ctx: &SessionContext, manifest: &CourseManifest) -> Result<SessionDigest, StudyError> {
    let completed = match ctx.state {
        SessionState::Completed => true,
        SessionState::Abandoned => false,
        state => {
            return Err(StudyError::IllegalState {
                state,
                action: "summarize the session",
            })
        }
    };
    let heading = match (&ctx.planned.title, manifest.unit(&ctx.planned.unit_id)) {
        (Some(title), _) => title.clone(),
        (None, Some(unit)) => format!("Unit {}: {}", unit.unit_id, unit.title),
        (None, None) => format!("Unit {}", ctx.planned.unit_id),
    };
    let lessons: Vec<DigestLesson> = ctx
        .lesson_ids
        .iter()
        .map(|id| DigestLesson {
            lesson_id: id.clone(),
            title: manifest.lesson(id).map_or_else(|| id.clone(), |l| l.title.clone()),
        })
        .collect();
    let questions: Vec<String> = ctx.answers.iter().map(|a| a.question.clone()).collect();
    let (score_display, weak_concepts) = match &ctx.result {
        Some(r) if completed => (Some(r.score_display.clone()), r.weak_concepts()),
        _ => (None, Vec::new()),
    };
    let next_step = if !completed {
        "Pick this material up again in your next session before moving on.".to_string()
    } else if weak_concepts.is_empty() {
        "Continue with the next scheduled session.".to_string()
    } else {
        format!("Review {} before the next session.", weak_concepts.join(", "))
    };

    let mut text = format!("Session {}: {heading}\n", ctx.session_id);
    text.push_str(if completed {
        "Status: completed\n"
    } else {
        "Status: incomplete (abandoned)\n"
    });
    text.push_str("Lessons covered:\n");
    for l in &lessons {
        text.push_str(&format!("  - {}\n", l.title));
    }
    text.push_str(&format!("Questions asked: {}\n", questions.len()));
    for a in &ctx.answers {
        let scope = match (a.scope_flag, a.citations.first()) {
            (ScopeFlag::InScope, Some(c)) => format!("in scope, {}", format_timestamp((c.start_s * 1000.0).round() as u64)),
            (ScopeFlag::InScope, None) => "in scope".to_string(),
            (ScopeFlag::OutOfScope, _) => "out of scope".to_string(),
        };
        text.push_str(&format!("  - {} [{scope}]\n", a.question));
    }
    if let (Some(score), Some(r)) = (&score_display, &ctx.result) {
        text.push_str(&format!("Quiz score: {score} ({}/{})\n", r.correct, r.total));
        if weak_concepts.is_empty() {
            text.push_str("Areas of confusion: none\n");
        } else {
            text.push_str(&format!("Areas of confusion: {}\n", weak_concepts.join(", ")));
        }
    }
    text.push_str(&format!("Next step: {next_step}\n"));

    Ok(SessionDigest {
        session_id: ctx.session_id.clone(),
        completed,
        heading,
        lessons,
        questions,
        score_display,
        weak_concepts,
        next_step,
        text,
    })
}
