use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::provider::schema::OPTIONS_PER_QUESTION;

use super::StudyError;

/// Default number of questions in an end-of-session quiz.
pub const DEFAULT_QUIZ_QUESTIONS: usize = 4;

/// The transcript cue a quiz question was written from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub lesson_id: String,
    pub cue_index: usize,
    pub start_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizQuestion {
    pub stem: String,
    pub options: Vec<String>,
    pub correct_index: usize,
    pub concept_tag: String,
    pub source_refs: Vec<SourceRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizSpec {
    pub quiz_id: String,
    pub session_id: String,
    pub questions: Vec<QuizQuestion>,
}

/// A quiz question as shown to the learner before submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicQuestion {
    pub stem: String,
    pub options: Vec<String>,
    pub concept_tag: String,
    pub source_refs: Vec<SourceRef>,
}

/// A quiz with every answer key removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicQuiz {
    pub quiz_id: String,
    pub session_id: String,
    pub questions: Vec<PublicQuestion>,
}

impl QuizSpec {
    pub fn redacted(&self) -> PublicQuiz {
        PublicQuiz {
            quiz_id: self.quiz_id.clone(),
            session_id: self.session_id.clone(),
            questions: self
                .questions
                .iter()
                .map(|q| PublicQuestion {
                    stem: q.stem.clone(),
                    options: q.options.clone(),
                    concept_tag: q.concept_tag.clone(),
                    source_refs: q.source_refs.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConceptTally {
    pub asked: u32,
    pub correct: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizResult {
    pub quiz_id: String,
    pub answers: Vec<usize>,
    pub correct: u32,
    pub total: u32,
    /// Percentage rounded half-up to one decimal, e.g. "42.9%".
    pub score_display: String,
    pub per_concept: BTreeMap<String, ConceptTally>,
}

impl QuizResult {
    pub fn score_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            f64::from(self.correct) / f64::from(self.total)
        }
    }

    /// Concepts with at least one wrong answer, in tag order.
    pub fn weak_concepts(&self) -> Vec<String> {
        self.per_concept
            .iter()
            .filter(|(_, t)| t.correct < t.asked)
            .map(|(tag, _)| tag.clone())
            .collect()
    }
}

/// Formats `correct / total` as a percentage with one decimal, rounding
/// halves up. Integer arithmetic only.
pub fn format_percent(correct: u32, total: u32) -> String {
    if total == 0 {
        return "0.0%".to_string();
    }
    let (c, t) = (u64::from(correct), u64::from(total));
    let tenths = (2 * 1000 * c + t) / (2 * t);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

pub fn score_quiz(spec: &QuizSpec, answers: &[usize]) -> Result<QuizResult, StudyError> {
    if answers.len() != spec.questions.len() {
        return Err(StudyError::LengthMismatch {
            expected: spec.questions.len(),
            got: answers.len(),
        });
    }
    if let Some((question, &index)) = answers.iter().enumerate().find(|(_, &a)| a >= OPTIONS_PER_QUESTION) {
        return Err(StudyError::IndexOutOfRange { question, index });
    }
    let mut per_concept: BTreeMap<String, ConceptTally> = BTreeMap::new();
    let mut correct = 0;
    for (q, &a) in spec.questions.iter().zip(answers) {
        let tally = per_concept.entry(q.concept_tag.clone()).or_default();
        tally.asked += 1;
        if q.correct_index == a {
            tally.correct += 1;
            correct += 1;
        }
    }
    let total = spec.questions.len() as u32;
    Ok(QuizResult {
        quiz_id: spec.quiz_id.clone(),
        answers: answers.to_vec(),
        correct,
        total,
        score_display: format_percent(correct, total),
        per_concept,
    })
}
