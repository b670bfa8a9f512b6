//! The study-session runtime: guidance, grounded questions with layered
//! expansions, the end-of-session quiz and its score, all logged as
//! interaction events.

mod digest;
mod log;
pub(crate) mod prompts;
mod quiz;

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::corpus::{retrieve_segments, Corpus, CorpusError, ProvenanceLabel, SegmentRef, DEFAULT_SCOPE_THRESHOLD};
use crate::domain::{LearnerProfile, PlannedSession, StudyPlan};
use crate::provider::payloads::{
    AnswerPayload, DetailsPayload, GuidancePayload, McqPayload, PracticePayload, QuizPayload, ResourcesPayload,
};
use crate::provider::{complete_typed, Provider, ProviderError};

pub use digest::{session_digest, DigestLesson, SessionDigest};
pub use log::{export_jsonl, import_jsonl, EventDetail, InteractionEvent, SessionOutcome};
pub use quiz::{
    format_percent, score_quiz, ConceptTally, PublicQuestion, PublicQuiz, QuizQuestion, QuizResult, QuizSpec,
    SourceRef, DEFAULT_QUIZ_QUESTIONS,
};

/// Prefix of the notice carried by every out-of-scope answer.
pub const OUT_OF_SCOPE_NOTICE: &str = "Outside this session: the lessons scheduled for this session do not \
     cover this question, so the reply below is general background rather than course material.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionState {
    Scheduled,
    Active,
    Quizzing,
    Completed,
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScopeFlag {
    InScope,
    OutOfScope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    MoreDetails,
    PracticeQuestions,
    ExternalResources,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::MoreDetails, Tier::PracticeQuestions, Tier::ExternalResources];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::MoreDetails => "more_details",
            Tier::PracticeQuestions => "practice_questions",
            Tier::ExternalResources => "external_resources",
        }
    }

    pub fn parse(text: &str) -> Option<Tier> {
        Tier::ALL.into_iter().find(|t| t.as_str() == text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLink {
    pub url: String,
    pub label: String,
    pub provenance_label: ProvenanceLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PracticeItem {
    pub stem: String,
    pub options: Vec<String>,
    /// Self-check key, shown with the item. Named apart from the quiz
    /// answer key, which is never sent before submission.
    pub answer_index: usize,
    pub concept_tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierContent {
    pub tier: Tier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<PracticeItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resources: Vec<ResourceLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedAnswer {
    pub answer_id: String,
    pub question: String,
    pub text: String,
    pub citations: Vec<SegmentRef>,
    pub scope_flag: ScopeFlag,
    pub expandable: Vec<Tier>,
    pub expansions: BTreeMap<Tier, TierContent>,
}

impl GroundedAnswer {
    pub fn expansion(&self, tier: Tier) -> Option<&TierContent> {
        self.expansions.get(&tier)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub scope_threshold: f64,
    pub top_k: usize,
    pub quiz_questions: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            scope_threshold: DEFAULT_SCOPE_THRESHOLD,
            top_k: 3,
            quiz_questions: DEFAULT_QUIZ_QUESTIONS,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error("no session `{0}` in this plan")]
    UnknownSession(String),
    #[error("illegal transition from {from:?} to {to:?}")]
    IllegalTransition { from: SessionState, to: SessionState },
    #[error("cannot {action} while the session is {state:?}")]
    IllegalState { state: SessionState, action: &'static str },
    #[error("question has no content words")]
    EmptyQuery,
    #[error("no answer `{0}` in this session")]
    UnknownAnswer(String),
    #[error("tier {} was already expanded", .0.as_str())]
    TierAlreadyFilled(Tier),
    #[error("expected {expected} answers, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("answer {index} to question {question} is not an option index")]
    IndexOutOfRange { question: usize, index: usize },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Runtime state of one planned session. Every operation either succeeds
/// and appends to `log`, or fails and leaves the context untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionContext {
    pub session_id: String,
    pub plan_id: String,
    pub plan_version: u32,
    pub planned: PlannedSession,
    pub state: SessionState,
    pub started_at: Option<DateTime<Utc>>,
    pub ended_at: Option<DateTime<Utc>>,
    pub lesson_ids: Vec<String>,
    pub history_lesson_ids: Vec<String>,
    pub guidance: Option<String>,
    pub focus_points: Vec<String>,
    pub answers: Vec<GroundedAnswer>,
    pub quiz: Option<QuizSpec>,
    pub result: Option<QuizResult>,
    pub log: Vec<InteractionEvent>,
}

impl SessionContext {
    pub fn scheduled(plan: &StudyPlan, session_id: &str) -> Result<Self, StudyError> {
        let planned = plan
            .session(session_id)
            .ok_or_else(|| StudyError::UnknownSession(session_id.to_string()))?
            .clone();
        Ok(Self {
            session_id: session_id.to_string(),
            plan_id: plan.plan_id.clone(),
            plan_version: plan.version,
            lesson_ids: planned.lesson_ids.clone(),
            planned,
            state: SessionState::Scheduled,
            started_at: None,
            ended_at: None,
            history_lesson_ids: Vec::new(),
            guidance: None,
            focus_points: Vec::new(),
            answers: Vec::new(),
            quiz: None,
            result: None,
            log: Vec::new(),
        })
    }

    pub fn quiz_id(&self) -> String {
        format!("{}-{}-quiz", self.plan_id, self.session_id)
    }

    fn transition(&self, to: SessionState) -> Result<(), StudyError> {
        use SessionState::*;
        let legal = matches!(
            (self.state, to),
            (Scheduled, Active) | (Active, Quizzing) | (Quizzing, Completed) | (Active, Abandoned)
        );
        if legal {
            Ok(())
        } else {
            Err(StudyError::IllegalTransition { from: self.state, to })
        }
    }

    fn require_active(&self, action: &'static str) -> Result<(), StudyError> {
        if self.state == SessionState::Active {
            Ok(())
        } else {
            Err(StudyError::IllegalState {
                state: self.state,
                action,
            })
        }
    }

    /// Timestamps never run backwards within a session log.
    fn stamp(&self, clock: &dyn Clock) -> DateTime<Utc> {
        let now = clock.now();
        self.log.last().map_or(now, |e| now.max(e.timestamp))
    }

    fn push(&mut self, timestamp: DateTime<Utc>, detail: EventDetail) {
        self.log.push(InteractionEvent {
            timestamp,
            session_id: self.session_id.clone(),
            detail,
        });
    }

    fn scope_lessons(&self) -> Vec<&str> {
        self.lesson_ids
            .iter()
            .chain(&self.history_lesson_ids)
            .map(String::as_str)
            .collect()
    }

    /// Scheduled → Active. `history_lesson_ids` are lessons from sessions
    /// already completed; questions may draw on them too.
    pub fn start(
        &mut self,
        profile: &LearnerProfile,
        corpus: &Corpus,
        history_lesson_ids: Vec<String>,
        provider: &dyn Provider,
        clock: &dyn Clock,
    ) -> Result<(), StudyError> {
        self.transition(SessionState::Active)?;
        let envelope = prompts::guidance_envelope(&self.planned, corpus.manifest(), profile);
        let guidance: GuidancePayload = complete_typed(provider, &envelope, |_: &GuidancePayload| Vec::new())?;
        let now = self.stamp(clock);
        let mut history: Vec<String> = Vec::new();
        let own: HashSet<&str> = self.lesson_ids.iter().map(String::as_str).collect();
        for lesson in history_lesson_ids {
            if !own.contains(lesson.as_str()) && !history.contains(&lesson) {
                history.push(lesson);
            }
        }
        self.history_lesson_ids = history;
        self.state = SessionState::Active;
        self.started_at = Some(now);
        self.guidance = Some(guidance.guidance);
        self.focus_points = guidance.focus_points;
        let detail = EventDetail::SessionStarted {
            plan_id: self.plan_id.clone(),
            plan_version: self.plan_version,
            lesson_ids: self.lesson_ids.clone(),
            planned_minutes: self.planned.duration_minutes(),
        };
        self.push(now, detail);
        Ok(())
    }

    /// Answers a question from the session's transcripts. Questions below
    /// the scope threshold are still answered, flagged and without citations.
    pub fn ask(
        &mut self,
        question: &str,
        corpus: &Corpus,
        provider: &dyn Provider,
        clock: &dyn Clock,
        config: &StudyConfig,
    ) -> Result<GroundedAnswer, StudyError> {
        self.require_active("ask a question")?;
        let hits = match retrieve_segments(question, corpus.scoped(self.scope_lessons()), config.top_k) {
            Ok(hits) => hits,
            Err(CorpusError::EmptyQuery) => return Err(StudyError::EmptyQuery),
            Err(e) => return Err(e.into()),
        };
        let top_score = hits.first().map_or(0.0, |h| h.score);
        let scope = if top_score >= config.scope_threshold {
            ScopeFlag::InScope
        } else {
            ScopeFlag::OutOfScope
        };
        let citations: Vec<SegmentRef> = match scope {
            ScopeFlag::InScope => hits.into_iter().filter(|h| h.score >= config.scope_threshold).collect(),
            ScopeFlag::OutOfScope => Vec::new(),
        };
        let segments = citations
            .iter()
            .filter_map(|c| prompts::segment_block(corpus, &c.lesson_id, c.cue_index))
            .collect();
        let envelope = prompts::qa_envelope(question, scope, &self.planned, corpus.manifest(), segments);
        let reply: AnswerPayload = complete_typed(provider, &envelope, |_: &AnswerPayload| Vec::new())?;

        let text = match scope {
            ScopeFlag::InScope => reply.answer,
            ScopeFlag::OutOfScope => format!("{OUT_OF_SCOPE_NOTICE}\n\n{}", reply.answer),
        };
        let answer = GroundedAnswer {
            answer_id: format!("a{}", self.answers.len() + 1),
            question: question.to_string(),
            text,
            scope_flag: scope,
            expandable: Tier::ALL.to_vec(),
            expansions: BTreeMap::new(),
            citations,
        };
        let now = self.stamp(clock);
        let detail = EventDetail::QuestionAsked {
            answer_id: answer.answer_id.clone(),
            question: question.to_string(),
            top_lesson_id: answer.citations.first().map(|c| c.lesson_id.clone()),
            top_score,
            scope,
        };
        self.push(now, detail);
        self.answers.push(answer.clone());
        Ok(answer)
    }

    /// Fills one disclosure tier of an earlier answer. Each tier is
    /// generated once and then cached.
    pub fn expand(
        &mut self,
        answer_id: &str,
        tier: Tier,
        corpus: &Corpus,
        provider: &dyn Provider,
        clock: &dyn Clock,
    ) -> Result<TierContent, StudyError> {
        self.require_active("expand an answer")?;
        let index = self
            .answers
            .iter()
            .position(|a| a.answer_id == answer_id)
            .ok_or_else(|| StudyError::UnknownAnswer(answer_id.to_string()))?;
        let answer = &self.answers[index];
        if answer.expansion(tier).is_some() {
            return Err(StudyError::TierAlreadyFilled(tier));
        }
        let envelope = prompts::tier_envelope(tier, answer, &self.planned, corpus.manifest(), corpus);
        let content = match tier {
            Tier::MoreDetails => {
                let p: DetailsPayload = complete_typed(provider, &envelope, |_: &DetailsPayload| Vec::new())?;
                TierContent {
                    tier,
                    text: Some(p.text),
                    items: Vec::new(),
                    resources: Vec::new(),
                }
            }
            Tier::PracticeQuestions => {
                let p: PracticePayload = complete_typed(provider, &envelope, |_: &PracticePayload| Vec::new())?;
                TierContent {
                    tier,
                    text: None,
                    items: p.questions.into_iter().map(practice_item).collect(),
                    resources: Vec::new(),
                }
            }
            Tier::ExternalResources => {
                let p: ResourcesPayload = complete_typed(provider, &envelope, |_: &ResourcesPayload| Vec::new())?;
                TierContent {
                    tier,
                    text: None,
                    items: Vec::new(),
                    resources: self.resources_for(answer, corpus, p),
                }
            }
        };
        let now = self.stamp(clock);
        self.push(
            now,
            EventDetail::TierExpanded {
                answer_id: answer_id.to_string(),
                tier,
            },
        );
        self.answers[index].expansions.insert(tier, content.clone());
        Ok(content)
    }

    /// Curated links of the cited lessons (or the session's lessons when
    /// nothing was cited) come first; agent suggestions follow as
    /// low-confidence.
    fn resources_for(&self, answer: &GroundedAnswer, corpus: &Corpus, suggested: ResourcesPayload) -> Vec<ResourceLink> {
        let mut lessons: Vec<&str> = answer.citations.iter().map(|c| c.lesson_id.as_str()).collect();
        if lessons.is_empty() {
            lessons = self.lesson_ids.iter().map(String::as_str).collect();
        }
        let mut seen_lessons = HashSet::new();
        let mut seen_urls = HashSet::new();
        let mut out = Vec::new();
        for lesson in lessons.into_iter().filter(|l| seen_lessons.insert(*l)) {
            let Some(lesson) = corpus.manifest().lesson(lesson) else { continue };
            for r in &lesson.curated_resources {
                if seen_urls.insert(r.url.clone()) {
                    out.push(ResourceLink {
                        url: r.url.clone(),
                        label: r.label.clone(),
                        provenance_label: r.provenance_label,
                    });
                }
            }
        }
        for link in suggested.resources {
            if seen_urls.insert(link.url.clone()) {
                out.push(ResourceLink {
                    url: link.url,
                    label: link.label,
                    provenance_label: ProvenanceLabel::LowConfidence,
                });
            }
        }
        out
    }

    /// Active → Quizzing. Generates the quiz from the session's transcripts
    /// and the questions the learner asked.
    pub fn end(
        &mut self,
        corpus: &Corpus,
        provider: &dyn Provider,
        clock: &dyn Clock,
        config: &StudyConfig,
    ) -> Result<QuizSpec, StudyError> {
        self.transition(SessionState::Quizzing)?;
        let asked: Vec<String> = self.answers.iter().map(|a| a.question.clone()).collect();
        let envelope = prompts::quiz_envelope(&self.planned, corpus.manifest(), corpus, &asked, config.quiz_questions);
        let lessons: HashSet<&str> = self.lesson_ids.iter().map(String::as_str).collect();
        let payload: QuizPayload = complete_typed(provider, &envelope, |p: &QuizPayload| {
            quiz_problems(p, config.quiz_questions, &lessons, corpus)
        })?;
        let spec = QuizSpec {
            quiz_id: self.quiz_id(),
            session_id: self.session_id.clone(),
            questions: payload
                .questions
                .into_iter()
                .map(|q| QuizQuestion {
                    source_refs: q
                        .source_refs
                        .iter()
                        .map(|r| SourceRef {
                            lesson_id: r.lesson_id.clone(),
                            cue_index: r.cue_index,
                            start_s: corpus.cue(&r.lesson_id, r.cue_index).expect("checked").start_s(),
                        })
                        .collect(),
                    stem: q.stem,
                    options: q.options,
                    correct_index: q.correct_index,
                    concept_tag: q.concept_tag,
                })
                .collect(),
        };
        let now = self.stamp(clock);
        let elapsed = self.started_at.map_or(0, |s| (now - s).num_seconds());
        self.push(
            now,
            EventDetail::SessionEnded {
                outcome: SessionOutcome::Finished,
                elapsed_seconds: elapsed,
                planned_minutes: self.planned.duration_minutes(),
            },
        );
        self.state = SessionState::Quizzing;
        self.ended_at = Some(now);
        self.quiz = Some(spec.clone());
        Ok(spec)
    }

    /// Quizzing → Completed.
    pub fn submit_quiz(&mut self, answers: &[usize], clock: &dyn Clock) -> Result<QuizResult, StudyError> {
        self.transition(SessionState::Completed)?;
        let spec = self.quiz.as_ref().expect("a quizzing session has a quiz");
        let result = score_quiz(spec, answers)?;
        let now = self.stamp(clock);
        self.push(
            now,
            EventDetail::QuizAnswered {
                quiz_id: result.quiz_id.clone(),
                correct: result.correct,
                total: result.total,
                weak_concepts: result.weak_concepts(),
            },
        );
        self.state = SessionState::Completed;
        self.result = Some(result.clone());
        Ok(result)
    }

    /// Active → Abandoned.
    pub fn abandon(&mut self, clock: &dyn Clock) -> Result<(), StudyError> {
        self.transition(SessionState::Abandoned)?;
        let now = self.stamp(clock);
        let elapsed = self.started_at.map_or(0, |s| (now - s).num_seconds());
        self.push(
            now,
            EventDetail::SessionEnded {
                outcome: SessionOutcome::Abandoned,
                elapsed_seconds: elapsed,
                planned_minutes: self.planned.duration_minutes(),
            },
        );
        self.state = SessionState::Abandoned;
        self.ended_at = Some(now);
        Ok(())
    }

    /// Per-concept tallies, if the quiz was submitted.
    pub fn concept_tallies(&self) -> BTreeMap<String, ConceptTally> {
        self.result.as_ref().map(|r| r.per_concept.clone()).unwrap_or_default()
    }
}

fn practice_item(q: McqPayload) -> PracticeItem {
    PracticeItem {
        stem: q.stem,
        options: q.options,
        answer_index: q.correct_index,
        concept_tag: q.concept_tag,
    }
}

fn quiz_problems(p: &QuizPayload, count: usize, lessons: &HashSet<&str>, corpus: &Corpus) -> Vec<String> {
    let mut out = Vec::new();
    if p.questions.len() != count {
        out.push(format!("$.questions: expected exactly {count} questions, found {}", p.questions.len()));
    }
    for (i, q) in p.questions.iter().enumerate() {
        for (j, r) in q.source_refs.iter().enumerate() {
            if !lessons.contains(r.lesson_id.as_str()) || corpus.cue(&r.lesson_id, r.cue_index).is_none() {
                out.push(format!(
                    "$.questions[{i}].source_refs[{j}]: {}#{} is not a segment of this session",
                    r.lesson_id, r.cue_index
                ));
            }
        }
    }
    out
}
