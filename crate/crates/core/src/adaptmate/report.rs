use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::provider::payloads::QuizAnalysisPayload;
use crate::provider::schema::ids;
use crate::provider::{complete_typed, AgentKind, ContextBlock, PromptEnvelope, Provider, TEMPLATE_VERSION};
use crate::studymate::{EventDetail, InteractionEvent, QuizResult, QuizSpec};

use super::AdaptError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakConcept {
    pub concept_tag: String,
    /// Indices of the questions on this concept that were answered wrongly.
    pub question_indices: Vec<usize>,
    /// Lessons the missed questions were drawn from.
    pub lesson_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizReport {
    pub quiz_id: String,
    pub plan_id: String,
    pub session_id: String,
    pub score_display: String,
    pub correct: u32,
    pub total: u32,
    pub weak_concepts: Vec<WeakConcept>,
    pub narrative: String,
}

/// A concept is weak when any question carrying it was answered wrongly.
/// Concepts are listed in order of their first missed question.
pub fn weak_concepts(spec: &QuizSpec, result: &QuizResult) -> Vec<WeakConcept> {
    let mut out: Vec<WeakConcept> = Vec::new();
    for (i, (q, &a)) in spec.questions.iter().zip(&result.answers).enumerate() {
        if q.correct_index == a {
            continue;
        }
        let pos = match out.iter().position(|w| w.concept_tag == q.concept_tag) {
            Some(p) => p,
            None => {
                out.push(WeakConcept {
                    concept_tag: q.concept_tag.clone(),
                    question_indices: Vec::new(),
                    lesson_ids: Vec::new(),
                });
                out.len() - 1
            }
        };
        let w = &mut out[pos];
        w.question_indices.push(i);
        for r in &q.source_refs {
            if !w.lesson_ids.contains(&r.lesson_id) {
                w.lesson_ids.push(r.lesson_id.clone());
            }
        }
    }
    out
}

fn analysis_envelope(spec: &QuizSpec, result: &QuizResult, weak: &[WeakConcept], asked: &[String]) -> PromptEnvelope {
    let questions: Vec<_> = spec
        .questions
        .iter()
        .zip(&result.answers)
        .map(|(q, &a)| {
            json!({
                "stem": q.stem,
                "concept_tag": q.concept_tag,
                "correct": q.correct_index == a,
            })
        })
        .collect();
    let tags: Vec<&str> = weak.iter().map(|w| w.concept_tag.as_str()).collect();
    PromptEnvelope::builder(AgentKind::QuizAnalysis)
        .system(format!(
            "[{TEMPLATE_VERSION}] You review a learner's quiz. Write a short, encouraging analysis \
             of the result. Discuss only the weak concepts listed, and list in \
             mentioned_concepts exactly the weak concepts your narrative discusses. If there \
             are none, congratulate the learner and leave mentioned_concepts empty. Reply with \
             JSON only."
        ))
        .user("Analyse my quiz result.")
        .block(ContextBlock::json(
            "quiz_result",
            &json!({
                "quiz_id": result.quiz_id,
                "score": result.score_display,
                "correct": result.correct,
                "total": result.total,
                "questions": questions,
            }),
        ))
        .block(ContextBlock::json("weak_concepts", &tags))
        .block(ContextBlock::json("questions_asked", asked))
        .schema(ids::QUIZ_ANALYSIS)
        .build()
}

/// Builds the quiz report: weak concepts by rule, narrative by the
/// QuizAnalysis agent, which may only mention those concepts.
pub fn analyze_quiz(
    result: &QuizResult,
    spec: &QuizSpec,
    plan_id: &str,
    log: &[InteractionEvent],
    provider: &dyn Provider,
) -> Result<QuizReport, AdaptError> {
    if result.quiz_id != spec.quiz_id || result.answers.len() != spec.questions.len() {
        return Err(AdaptError::Mismatch(format!(
            "result for `{}` does not belong to quiz `{}`",
            result.quiz_id, spec.quiz_id
        )));
    }
    let weak = weak_concepts(spec, result);
    let asked: Vec<String> = log
        .iter()
        .filter_map(|e| match &e.detail {
            EventDetail::QuestionAsked { question, .. } => Some(question.clone()),
            _ => None,
        })
        .collect();
    let allowed: BTreeSet<&str> = weak.iter().map(|w| w.concept_tag.as_str()).collect();
    let envelope = analysis_envelope(spec, result, &weak, &asked);
    let payload: QuizAnalysisPayload = complete_typed(provider, &envelope, |p: &QuizAnalysisPayload| {
        p.mentioned_concepts
            .iter()
            .enumerate()
            .filter(|(_, c)| !allowed.contains(c.as_str()))
            .map(|(i, c)| format!("$.mentioned_concepts[{i}]: `{c}` is not a weak concept"))
            .collect()
    })?;
    Ok(QuizReport {
        quiz_id: spec.quiz_id.clone(),
        plan_id: plan_id.to_string(),
        session_id: spec.session_id.clone(),
        score_display: result.score_display.clone(),
        correct: result.correct,
        total: result.total,
        weak_concepts: weak,
        narrative: payload.narrative,
    })
}
