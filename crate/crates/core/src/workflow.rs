//! The closed loop over persistent state: one entry point per learner-facing
//! step, shared by the command line and the HTTP service.
//!
//! Every mutating call runs under one lock, loads what it needs from the
//! repository, calls the pure module operation and appends the outcome.
//! A failed call appends nothing.

use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adaptmate::{
    analyze_quiz, build_signal, propose_adaptation, AdaptError, AdaptationProposal, Decision, DecisionRecord,
    HistoryEntry, ProposeOptions, QuizReport,
};
use crate::clock::Clock;
use crate::corpus::{Corpus, CorpusError};
use crate::domain::{validate_profile, DomainError, LearnerProfile, StudyPlan, ValidationReport};
use crate::persistence::{session_key, split_session_key, Recovery, Repository, StorageError};
use crate::planmate::{
    emit_ics, generate_plan, plan_to_events, IcsError, PlanError, PlanOptions, DEFAULT_MAX_REPAIR_ROUNDS,
};
use crate::provider::{Provider, ProviderError};
use crate::studymate::{
    session_digest, GroundedAnswer, PublicQuiz, QuizResult, QuizSpec, SessionContext, SessionDigest, SessionState,
    StudyConfig, StudyError, Tier, TierContent,
};

/// How a failure is surfaced at the boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    NotFound,
    BadInput,
    Validation,
    Conflict,
    Provider,
    Storage,
}

impl ErrorClass {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorClass::NotFound => 404,
            ErrorClass::BadInput => 400,
            ErrorClass::Validation => 422,
            ErrorClass::Conflict => 409,
            ErrorClass::Provider => 502,
            ErrorClass::Storage => 500,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::NotFound | ErrorClass::BadInput | ErrorClass::Provider => 1,
            ErrorClass::Validation | ErrorClass::Conflict => 2,
            ErrorClass::Storage => 3,
        }
    }
}

/// A failure with a stable machine code mirroring the module error, a
/// message, and optional structured detail such as a validation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkflowError {
    pub class: ErrorClass,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl std::fmt::Display for WorkflowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for WorkflowError {}

impl WorkflowError {
    pub fn new(class: ErrorClass, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            class,
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn with_detail<T: Serialize>(mut self, detail: &T) -> Self {
        self.detail = serde_json::to_value(detail).ok();
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(ErrorClass::NotFound, "NotFound", format!("not found: {}", what.into()))
    }

    pub fn bad_input(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::BadInput, "BadRequest", message)
    }

    pub fn http_status(&self) -> u16 {
        self.class.http_status()
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl From<StorageError> for WorkflowError {
    fn from(e: StorageError) -> Self {
        match e {
            StorageError::NotFound(what) => WorkflowError::not_found(what),
            other => WorkflowError::new(ErrorClass::Storage, "StorageFailure", other.to_string()),
        }
    }
}

impl From<ProviderError> for WorkflowError {
    fn from(e: ProviderError) -> Self {
        let code = match &e {
            ProviderError::Unavailable(_) => "ProviderUnavailable",
            ProviderError::Timeout => "ProviderTimeout",
            ProviderError::Schema { .. } => "SchemaViolation",
            ProviderError::MissingFixture { .. } => "MissingFixture",
            ProviderError::UnknownSchema(_) => "UnknownSchema",
            ProviderError::ScriptParse(_) => "ScriptParse",
        };
        let err = WorkflowError::new(ErrorClass::Provider, code, e.to_string());
        match &e {
            ProviderError::Schema { raw_texts, violations } => {
                err.with_detail(&json!({ "raw_texts": raw_texts, "violations": violations }))
            }
            ProviderError::MissingFixture { request_hash, agent } => {
                err.with_detail(&json!({ "request_hash": request_hash, "agent": agent }))
            }
            _ => err,
        }
    }
}

impl From<CorpusError> for WorkflowError {
    fn from(e: CorpusError) -> Self {
        let code = match &e {
            CorpusError::Io { .. } => "Io",
            CorpusError::Parse { .. } => "ParseError",
            CorpusError::Cycle(_) => "Cycle",
            CorpusError::DuplicateId(_) => "DuplicateId",
            CorpusError::InvalidManifest(_) => "InvalidManifest",
            CorpusError::NonMonotonicCue { .. } => "NonMonotonicCue",
            CorpusError::EmptyQuery => "EmptyQuery",
            CorpusError::InvalidArgument(_) => "InvalidArgument",
            CorpusError::MissingTranscript(_) => "MissingTranscript",
        };
        WorkflowError::new(ErrorClass::BadInput, code, e.to_string())
    }
}

impl From<DomainError> for WorkflowError {
    fn from(e: DomainError) -> Self {
        WorkflowError::new(ErrorClass::Validation, "InvalidTimezone", e.to_string())
    }
}

impl From<PlanError> for WorkflowError {
    fn from(e: PlanError) -> Self {
        let message = e.to_string();
        match e {
            PlanError::InvalidProfile(report) => {
                WorkflowError::new(ErrorClass::Validation, "InvalidProfile", message).with_detail(&report)
            }
            PlanError::NoAvailability => WorkflowError::new(ErrorClass::Validation, "NoAvailability", message),
            PlanError::EmptyManifest => WorkflowError::new(ErrorClass::Validation, "EmptyManifest", message),
            PlanError::RepairExhausted(report) => {
                WorkflowError::new(ErrorClass::Validation, "RepairExhausted", message).with_detail(&report)
            }
            PlanError::Provider(p) => p.into(),
            PlanError::Domain(d) => d.into(),
        }
    }
}

impl From<StudyError> for WorkflowError {
    fn from(e: StudyError) -> Self {
        let message = e.to_string();
        let (class, code) = match &e {
            StudyError::UnknownSession(_) => (ErrorClass::NotFound, "NotFound"),
            StudyError::IllegalTransition { .. } => (ErrorClass::Conflict, "IllegalTransition"),
            StudyError::IllegalState { .. } => (ErrorClass::Conflict, "IllegalState"),
            StudyError::TierAlreadyFilled(_) => (ErrorClass::Conflict, "TierAlreadyFilled"),
            StudyError::EmptyQuery => (ErrorClass::Validation, "EmptyQuery"),
            StudyError::UnknownAnswer(_) => (ErrorClass::NotFound, "NotFound"),
            StudyError::LengthMismatch { .. } => (ErrorClass::Validation, "LengthMismatch"),
            StudyError::IndexOutOfRange { .. } => (ErrorClass::Validation, "IndexOutOfRange"),
            StudyError::Provider(_) | StudyError::Corpus(_) => (ErrorClass::Provider, ""),
        };
        match e {
            StudyError::Provider(p) => p.into(),
            StudyError::Corpus(c) => c.into(),
            _ => WorkflowError::new(class, code, message),
        }
    }
}

impl From<AdaptError> for WorkflowError {
    fn from(e: AdaptError) -> Self {
        let message = e.to_string();
        match e {
            AdaptError::Mismatch(_) => WorkflowError::new(ErrorClass::Validation, "Mismatch", message),
            AdaptError::LineageMismatch(_) => WorkflowError::new(ErrorClass::Conflict, "LineageMismatch", message),
            AdaptError::StaleProposal {
                base_version,
                head_version,
            } => WorkflowError::new(ErrorClass::Conflict, "StaleProposal", message)
                .with_detail(&json!({ "base_version": base_version, "head_version": head_version })),
            AdaptError::InvalidEdit { problems, report } => WorkflowError::new(ErrorClass::Validation, "InvalidEdit", message)
                .with_detail(&json!({ "problems": problems, "report": report })),
            AdaptError::NothingToUndo => WorkflowError::new(ErrorClass::Conflict, "NothingToUndo", message),
            AdaptError::Plan(p) => p.into(),
            AdaptError::Provider(p) => p.into(),
        }
    }
}

impl From<IcsError> for WorkflowError {
    fn from(e: IcsError) -> Self {
        WorkflowError::new(ErrorClass::Validation, "DuplicateUid", e.to_string())
    }
}

pub type WorkflowResult<T> = Result<T, WorkflowError>;

/// A session as the learner may see it: the quiz answer key is present
/// only once the quiz was submitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_key: String,
    pub session_id: String,
    pub plan_id: String,
    pub plan_version: u32,
    pub state: SessionState,
    pub title: Option<String>,
    pub unit_id: String,
    pub lesson_ids: Vec<String>,
    pub started_at: Option<DateTime<Utc>>,
    pub ended_at: Option<DateTime<Utc>>,
    pub guidance: Option<String>,
    pub focus_points: Vec<String>,
    pub answers: Vec<GroundedAnswer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quiz: Option<PublicQuiz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<QuizResult>,
}

impl SessionView {
    pub fn of(ctx: &SessionContext) -> Self {
        Self {
            session_key: session_key(&ctx.plan_id, &ctx.session_id),
            session_id: ctx.session_id.clone(),
            plan_id: ctx.plan_id.clone(),
            plan_version: ctx.plan_version,
            state: ctx.state,
            title: ctx.planned.title.clone(),
            unit_id: ctx.planned.unit_id.clone(),
            lesson_ids: ctx.lesson_ids.clone(),
            started_at: ctx.started_at,
            ended_at: ctx.ended_at,
            guidance: ctx.guidance.clone(),
            focus_points: ctx.focus_points.clone(),
            answers: ctx.answers.clone(),
            quiz: ctx.quiz.as_ref().map(QuizSpec::redacted),
            result: ctx.result.clone(),
        }
    }
}

/// Outcome of a quiz submission: the score, the now-public answer key and
/// the analysed report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizOutcome {
    pub result: QuizResult,
    pub quiz: QuizSpec,
    pub report: QuizReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub decision: DecisionRecord,
    pub plan: StudyPlan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseSummary {
    pub course_id: String,
    pub title: String,
    pub units: usize,
    pub lessons: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReceipt {
    pub learner_id: String,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceConfig {
    pub study: StudyConfig,
    pub max_repair_rounds: u32,
    pub horizon_weeks: u32,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            study: StudyConfig::default(),
            max_repair_rounds: DEFAULT_MAX_REPAIR_ROUNDS,
            horizon_weeks: crate::domain::DEFAULT_HORIZON_WEEKS,
        }
    }
}

pub struct Workspace {
    repo: Repository,
    provider: Arc<dyn Provider>,
    clock: Arc<dyn Clock>,
    config: WorkspaceConfig,
    lock: Mutex<()>,
}

impl std::fmt::Debug for Workspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workspace").field("repo", &self.repo).finish()
    }
}

impl Workspace {
    pub fn open(
        dir: impl AsRef<Path>,
        provider: Arc<dyn Provider>,
        clock: Arc<dyn Clock>,
        config: WorkspaceConfig,
    ) -> WorkflowResult<(Self, Recovery)> {
        let (repo, recovery) = Repository::open(dir)?;
        Ok((
            Self {
                repo,
                provider,
                clock,
                config,
                lock: Mutex::new(()),
            },
            recovery,
        ))
    }

    pub fn repository(&self) -> &Repository {
        &self.repo
    }

    fn guard(&self) -> MutexGuard<'_, ()> {
        self.lock.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    /// Stores a profile as given and reports its problems. An invalid
    /// profile is kept so the learner can see why planning refuses it.
    pub fn put_profile(&self, profile: &LearnerProfile) -> WorkflowResult<ProfileReceipt> {
        if profile.learner_id.trim().is_empty() {
            return Err(WorkflowError::bad_input("learner_id must not be empty"));
        }
        let _g = self.guard();
        let report = validate_profile(profile);
        self.repo.put_profile(profile, self.now())?;
        Ok(ProfileReceipt {
            learner_id: profile.learner_id.clone(),
            report,
        })
    }

    pub fn profile(&self, learner_id: &str) -> WorkflowResult<LearnerProfile> {
        Ok(self.repo.profile(learner_id)?)
    }

    pub fn ingest(&self, corpus: &Corpus) -> WorkflowResult<CourseSummary> {
        let _g = self.guard();
        self.repo.put_course(corpus, self.now())?;
        Ok(course_summary(corpus))
    }

    pub fn ingest_path(&self, manifest_path: &Path) -> WorkflowResult<CourseSummary> {
        let corpus = Corpus::load(manifest_path)?;
        self.ingest(&corpus)
    }

    pub fn course(&self, course_id: &str) -> WorkflowResult<Arc<Corpus>> {
        Ok(self.repo.course(course_id)?)
    }

    /// Generates and stores version 0 of a new plan. Sessions start no
    /// earlier than today's date.
    pub fn create_plan(&self, learner_id: &str, course_id: &str) -> WorkflowResult<StudyPlan> {
        let _g = self.guard();
        let profile = self.repo.profile(learner_id)?;
        let corpus = self.repo.course(course_id)?;
        let now = self.now();
        let mut options = PlanOptions::new(self.repo.next_plan_id(), now.date_naive(), now);
        options.horizon_weeks = self.config.horizon_weeks;
        options.max_repair_rounds = self.config.max_repair_rounds;
        let plan = generate_plan(&profile, corpus.manifest(), self.provider.as_ref(), &options)?;
        self.repo.append_plan_version(&plan, now)?;
        Ok(plan)
    }

    pub fn plan(&self, plan_id: &str, version: Option<u32>) -> WorkflowResult<StudyPlan> {
        Ok(self.repo.load_plan_version(plan_id, version)?)
    }

    pub fn history(&self, plan_id: &str) -> WorkflowResult<Vec<HistoryEntry>> {
        Ok(self.repo.list_history(plan_id)?)
    }

    pub fn decisions(&self, plan_id: &str) -> WorkflowResult<Vec<DecisionRecord>> {
        self.repo.plan_versions(plan_id)?;
        Ok(self.repo.decisions(plan_id)?)
    }

    /// The iCalendar export of a plan version.
    pub fn ics(&self, plan_id: &str, version: Option<u32>) -> WorkflowResult<Vec<u8>> {
        let plan = self.repo.load_plan_version(plan_id, version)?;
        let corpus = self.repo.course(&plan.course_id)?;
        let events = plan_to_events(&plan, corpus.manifest());
        Ok(emit_ics(&events, &calendar_name(corpus.manifest().title.as_str()))?)
    }

    fn split_key<'a>(&self, key: &'a str) -> WorkflowResult<(&'a str, &'a str)> {
        split_session_key(key).ok_or_else(|| WorkflowError::not_found(format!("session `{key}`")))
    }

    /// The stored context of a session, or a fresh scheduled one if the
    /// session was never started.
    fn load_session(&self, key: &str) -> WorkflowResult<(SessionContext, usize)> {
        let (plan_id, session_id) = self.split_key(key)?;
        if let Some(ctx) = self.repo.session(key)? {
            let len = ctx.log.len();
            return Ok((ctx, len));
        }
        let plan = self.repo.load_plan_version(plan_id, None)?;
        let ctx = SessionContext::scheduled(&plan, session_id)
            .map_err(|_| WorkflowError::not_found(format!("session `{key}`")))?;
        Ok((ctx, 0))
    }

    pub fn session(&self, key: &str) -> WorkflowResult<SessionView> {
        Ok(SessionView::of(&self.load_session(key)?.0))
    }

    fn save(&self, ctx: &SessionContext, persisted: usize) -> WorkflowResult<()> {
        Ok(self.repo.save_session(ctx, persisted, self.now())?)
    }

    fn corpus_for(&self, plan_id: &str) -> WorkflowResult<(StudyPlan, Arc<Corpus>)> {
        let plan = self.repo.load_plan_version(plan_id, None)?;
        let corpus = self.repo.course(&plan.course_id)?;
        Ok((plan, corpus))
    }

    /// Scheduled to Active. A learner has at most one active session.
    pub fn start_session(&self, key: &str) -> WorkflowResult<SessionView> {
        let _g = self.guard();
        let (mut ctx, persisted) = self.load_session(key)?;
        let (plan, corpus) = self.corpus_for(&ctx.plan_id)?;
        let profile = self.repo.profile(&plan.learner_id)?;
        if ctx.state == SessionState::Scheduled {
            if let Some(active) = self.active_session_of(&plan.learner_id)? {
                return Err(WorkflowError::new(
                    ErrorClass::Conflict,
                    "SessionAlreadyActive",
                    format!("session `{active}` is still active"),
                ));
            }
        }
        let history = self.completed_lessons(&ctx.plan_id)?;
        ctx.start(&profile, &corpus, history, self.provider.as_ref(), self.clock.as_ref())?;
        self.save(&ctx, persisted)?;
        Ok(SessionView::of(&ctx))
    }

    fn active_session_of(&self, learner_id: &str) -> WorkflowResult<Option<String>> {
        for plan_id in self.repo.plan_ids() {
            let plan = self.repo.load_plan_version(&plan_id, Some(0))?;
            if plan.learner_id != learner_id {
                continue;
            }
            for key in self.repo.session_keys(&plan_id) {
                if let Some(ctx) = self.repo.session(&key)? {
                    if ctx.state == SessionState::Active {
                        return Ok(Some(key));
                    }
                }
            }
        }
        Ok(None)
    }

    fn completed_lessons(&self, plan_id: &str) -> WorkflowResult<Vec<String>> {
        let mut out = Vec::new();
        for key in self.repo.session_keys(plan_id) {
            if let Some(ctx) = self.repo.session(&key)? {
                if ctx.state == SessionState::Completed {
                    out.extend(ctx.lesson_ids);
                }
            }
        }
        Ok(out)
    }

    pub fn ask(&self, key: &str, question: &str) -> WorkflowResult<GroundedAnswer> {
        let _g = self.guard();
        let (mut ctx, persisted) = self.load_session(key)?;
        let (_, corpus) = self.corpus_for(&ctx.plan_id)?;
        let answer = ctx.ask(question, &corpus, self.provider.as_ref(), self.clock.as_ref(), &self.config.study)?;
        self.save(&ctx, persisted)?;
        Ok(answer)
    }

    pub fn expand(&self, key: &str, answer_id: &str, tier: Tier) -> WorkflowResult<TierContent> {
        let _g = self.guard();
        let (mut ctx, persisted) = self.load_session(key)?;
        let (_, corpus) = self.corpus_for(&ctx.plan_id)?;
        let content = ctx.expand(answer_id, tier, &corpus, self.provider.as_ref(), self.clock.as_ref())?;
        self.save(&ctx, persisted)?;
        Ok(content)
    }

    /// Active to Quizzing. Returns the quiz without its answer key.
    pub fn end_session(&self, key: &str) -> WorkflowResult<PublicQuiz> {
        let _g = self.guard();
        let (mut ctx, persisted) = self.load_session(key)?;
        let (_, corpus) = self.corpus_for(&ctx.plan_id)?;
        let quiz = ctx.end(&corpus, self.provider.as_ref(), self.clock.as_ref(), &self.config.study)?;
        self.save(&ctx, persisted)?;
        Ok(quiz.redacted())
    }

    pub fn abandon_session(&self, key: &str) -> WorkflowResult<SessionView> {
        let _g = self.guard();
        let (mut ctx, persisted) = self.load_session(key)?;
        ctx.abandon(self.clock.as_ref())?;
        self.save(&ctx, persisted)?;
        Ok(SessionView::of(&ctx))
    }

    /// Quizzing to Completed: scores the answers and analyses the result.
    /// The session and its report are stored together only if both succeed.
    pub fn submit_quiz(&self, key: &str, answers: &[usize]) -> WorkflowResult<QuizOutcome> {
        let _g = self.guard();
        let (mut ctx, persisted) = self.load_session(key)?;
        let result = ctx.submit_quiz(answers, self.clock.as_ref())?;
        let quiz = ctx.quiz.clone().expect("a completed session has a quiz");
        let report = analyze_quiz(&result, &quiz, &ctx.plan_id, &ctx.log, self.provider.as_ref())?;
        self.save(&ctx, persisted)?;
        self.repo.put_quiz_report(&report, self.now())?;
        Ok(QuizOutcome { result, quiz, report })
    }

    pub fn digest(&self, key: &str) -> WorkflowResult<SessionDigest> {
        let (ctx, _) = self.load_session(key)?;
        let (_, corpus) = self.corpus_for(&ctx.plan_id)?;
        Ok(session_digest(&ctx, corpus.manifest())?)
    }

    pub fn quiz_report(&self, key: &str) -> WorkflowResult<QuizReport> {
        self.split_key(key)?;
        self.repo
            .quiz_report(key)?
            .ok_or_else(|| WorkflowError::not_found(format!("quiz report for session `{key}`")))
    }

    /// Builds the adaptation signal from everything recorded on the plan and
    /// stores the resulting proposal.
    pub fn propose(&self, plan_id: &str) -> WorkflowResult<AdaptationProposal> {
        let _g = self.guard();
        let (plan, corpus) = self.corpus_for(plan_id)?;
        let profile = self.repo.profile(&plan.learner_id)?;
        let report = self.repo.latest_quiz_report(plan_id)?;
        let mut logs = Vec::new();
        for key in self.repo.session_keys(plan_id) {
            logs.extend(self.repo.interactions(&key)?);
        }
        let signal = build_signal(report.as_ref(), &logs, &plan, corpus.manifest(), &profile)?;
        let options = ProposeOptions {
            proposal_id: self.repo.next_proposal_id(plan_id)?,
            now: self.now(),
            max_repair_rounds: self.config.max_repair_rounds,
        };
        let proposal = propose_adaptation(&signal, &plan, &profile, corpus.manifest(), self.provider.as_ref(), &options)?;
        self.repo.put_proposal(&proposal)?;
        Ok(proposal)
    }

    pub fn proposal(&self, proposal_id: &str) -> WorkflowResult<AdaptationProposal> {
        Ok(self.repo.proposal(proposal_id)?)
    }

    /// Applies the learner's decision. Each proposal is decided at most once.
    pub fn decide(&self, proposal_id: &str, decision: Decision) -> WorkflowResult<DecisionOutcome> {
        let _g = self.guard();
        let proposal = self.repo.proposal(proposal_id)?;
        let mut history = self.repo.history(&proposal.plan_id)?;
        if history.decisions().iter().any(|d| d.proposal_id == proposal_id) {
            return Err(WorkflowError::new(
                ErrorClass::Conflict,
                "AlreadyDecided",
                format!("proposal `{proposal_id}` was already decided"),
            ));
        }
        let head = history.head().clone();
        let profile = self.repo.profile(&head.learner_id)?;
        let corpus = self.repo.course(&head.course_id)?;
        let record = history
            .apply_decision(&proposal, decision, &profile, corpus.manifest(), self.now())?
            .clone();
        let plan = history.head().clone();
        let created = record.resulting_version.map(|_| &plan);
        self.repo.append_decision(&record, created)?;
        Ok(DecisionOutcome { decision: record, plan })
    }

    /// Appends a version restoring the sessions of the head's parent.
    pub fn undo(&self, plan_id: &str) -> WorkflowResult<StudyPlan> {
        let _g = self.guard();
        let mut history = self.repo.history(plan_id)?;
        let plan = history.undo(self.now())?.clone();
        self.repo.append_plan_version(&plan, plan.created_at)?;
        Ok(plan)
    }

    /// Runs a whole session from a script: start, questions with their
    /// expansions, end, quiz submission.
    pub fn simulate(&self, key: &str, script: &SessionScript) -> WorkflowResult<SimulationOutcome> {
        self.start_session(key)?;
        for q in &script.questions {
            let answer = self.ask(key, &q.question)?;
            for &tier in &q.expand {
                self.expand(key, &answer.answer_id, tier)?;
            }
        }
        let quiz = self.end_session(key)?;
        let outcome = self.submit_quiz(key, &script.quiz_answers)?;
        Ok(SimulationOutcome {
            session: self.session(key)?,
            quiz,
            outcome,
        })
    }
}

/// A scripted study session: questions in order, the tiers to open on each
/// answer, and the quiz answers to submit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionScript {
    pub questions: Vec<ScriptedQuestion>,
    pub quiz_answers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedQuestion {
    pub question: String,
    #[serde(default)]
    pub expand: Vec<Tier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub session: SessionView,
    pub quiz: PublicQuiz,
    pub outcome: QuizOutcome,
}

pub fn calendar_name(course_title: &str) -> String {
    format!("LearnMate: {course_title}")
}

fn course_summary(corpus: &Corpus) -> CourseSummary {
    CourseSummary {
        course_id: corpus.course_id().to_string(),
        title: corpus.manifest().title.clone(),
        units: corpus.manifest().units.len(),
        lessons: corpus.manifest().lesson_count(),
    }
}
