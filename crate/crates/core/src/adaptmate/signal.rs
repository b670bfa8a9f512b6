use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::CourseManifest;
use crate::domain::{LearnerProfile, StudyPlan};
use crate::studymate::{EventDetail, InteractionEvent, SessionOutcome};

use super::{AdaptError, QuizReport, WeakConcept};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionStatus {
    Completed,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub status: CompletionStatus,
    pub elapsed_seconds: i64,
    pub planned_minutes: i64,
}

impl CompletionRecord {
    pub fn overran(&self) -> bool {
        self.elapsed_seconds > self.planned_minutes * 60
    }
}

/// Lessons of the sessions that were started, and of those that were
/// completed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Coverage {
    pub studied: BTreeSet<String>,
    pub planned: BTreeSet<String>,
}

/// Everything the adaptation agent sees about how studying went.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationSignal {
    pub plan_id: String,
    pub plan_version: u32,
    pub weak_concepts: Vec<WeakConcept>,
    pub question_frequency: BTreeMap<String, u32>,
    pub completion: BTreeMap<String, CompletionRecord>,
    pub coverage: Coverage,
    pub profile: LearnerProfile,
}

impl AdaptationSignal {
    /// Nothing to act on: no weak concepts, and every finished session was
    /// completed within its planned time.
    pub fn is_quiescent(&self) -> bool {
        self.weak_concepts.is_empty()
            && self
                .completion
                .values()
                .all(|c| c.status == CompletionStatus::Completed && !c.overran())
    }

    /// Names a rationale may cite as evidence, e.g. `weak_concept:farming`.
    pub fn evidence_keys(&self) -> BTreeSet<String> {
        let mut keys = BTreeSet::new();
        for w in &self.weak_concepts {
            keys.insert(format!("weak_concept:{}", w.concept_tag));
        }
        for lesson in self.question_frequency.keys() {
            keys.insert(format!("question_frequency:{lesson}"));
        }
        for session in self.completion.keys() {
            keys.insert(format!("completion:{session}"));
        }
        for lesson in self.coverage.studied.iter().chain(&self.coverage.planned) {
            keys.insert(format!("coverage:{lesson}"));
        }
        keys
    }
}

/// Aggregates a quiz report and interaction logs into an adaptation signal.
/// Pure; no agent is involved.
pub fn build_signal(
    report: Option<&QuizReport>,
    logs: &[InteractionEvent],
    plan: &StudyPlan,
    manifest: &CourseManifest,
    profile: &LearnerProfile,
) -> Result<AdaptationSignal, AdaptError> {
    if let Some(r) = report {
        if r.plan_id != plan.plan_id {
            return Err(AdaptError::LineageMismatch(format!(
                "quiz report is for plan `{}`, not `{}`",
                r.plan_id, plan.plan_id
            )));
        }
    }
    let known: HashSet<&str> = manifest.lessons().map(|(_, l)| l.lesson_id.as_str()).collect();
    let mut started: BTreeMap<&str, &[String]> = BTreeMap::new();
    let mut question_frequency: BTreeMap<String, u32> = BTreeMap::new();
    let mut completion = BTreeMap::new();
    for e in logs {
        match &e.detail {
            EventDetail::SessionStarted { plan_id, lesson_ids, .. } => {
                if plan_id != &plan.plan_id {
                    return Err(AdaptError::LineageMismatch(format!(
                        "session `{}` belongs to plan `{plan_id}`, not `{}`",
                        e.session_id, plan.plan_id
                    )));
                }
                started.insert(e.session_id.as_str(), lesson_ids);
            }
            EventDetail::QuestionAsked {
                top_lesson_id: Some(lesson),
                ..
            } => *question_frequency.entry(lesson.clone()).or_insert(0) += 1,
            EventDetail::SessionEnded {
                outcome,
                elapsed_seconds,
                planned_minutes,
            } => {
                completion.insert(
                    e.session_id.clone(),
                    CompletionRecord {
                        status: match outcome {
                            SessionOutcome::Finished => CompletionStatus::Completed,
                            SessionOutcome::Abandoned => CompletionStatus::Abandoned,
                        },
                        elapsed_seconds: *elapsed_seconds,
                        planned_minutes: *planned_minutes,
                    },
                );
            }
            _ => {}
        }
    }
    let studied = completion
        .iter()
        .filter(|(_, c)| c.status == CompletionStatus::Completed)
        .filter_map(|(id, _)| started.get(id.as_str()))
        .flat_map(|lessons| lessons.iter())
        .filter(|l| known.contains(l.as_str()))
        .cloned()
        .collect();
    let planned = started
        .values()
        .flat_map(|lessons| lessons.iter())
        .filter(|l| known.contains(l.as_str()))
        .cloned()
        .collect();
    Ok(AdaptationSignal {
        plan_id: plan.plan_id.clone(),
        plan_version: plan.version,
        weak_concepts: report.map(|r| r.weak_concepts.clone()).unwrap_or_default(),
        question_frequency,
        completion,
        coverage: Coverage { studied, planned },
        profile: profile.clone(),
    })
}
