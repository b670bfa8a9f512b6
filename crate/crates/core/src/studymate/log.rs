use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::canonical;

use super::{ScopeFlag, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionOutcome {
    /// The learner finished studying and moved on to the quiz.
    Finished,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventDetail {
    SessionStarted {
        plan_id: String,
        plan_version: u32,
        lesson_ids: Vec<String>,
        planned_minutes: i64,
    },
    QuestionAsked {
        answer_id: String,
        question: String,
        /// Lesson of the best-matching cue, when the question was in scope.
        top_lesson_id: Option<String>,
        top_score: f64,
        scope: ScopeFlag,
    },
    TierExpanded {
        answer_id: String,
        tier: Tier,
    },
    SessionEnded {
        outcome: SessionOutcome,
        elapsed_seconds: i64,
        planned_minutes: i64,
    },
    QuizAnswered {
        quiz_id: String,
        correct: u32,
        total: u32,
        weak_concepts: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub timestamp: DateTime<Utc>,
    pub session_id: String,
    #[serde(flatten)]
    pub detail: EventDetail,
}

/// One canonical JSON object per line.
pub fn export_jsonl(events: &[InteractionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&canonical::to_string(e));
        out.push('\n');
    }
    out
}

pub fn import_jsonl(text: &str) -> Result<Vec<InteractionEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
