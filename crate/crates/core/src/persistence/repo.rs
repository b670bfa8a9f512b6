use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adaptmate::{AdaptationProposal, DecisionRecord, HistoryEntry, PlanHistory, QuizReport};
use crate::corpus::Corpus;
use crate::domain::{LearnerProfile, StudyPlan};
use crate::studymate::{InteractionEvent, SessionContext};

use super::log::{EventLog, Recovery, StoredEvent, LOG_FILE};
use super::StorageError;

pub mod kinds {
    pub const PROFILE: &str = "profile";
    pub const COURSE: &str = "course";
    pub const PLAN_VERSION: &str = "plan_version";
    pub const PROPOSAL: &str = "proposal";
    pub const DECISION: &str = "decision";
    pub const SESSION_STATE: &str = "session_state";
    pub const INTERACTION: &str = "interaction";
    pub const QUIZ_REPORT: &str = "quiz_report";
}

pub fn profile_stream(learner_id: &str) -> String {
    format!("profile:{learner_id}")
}

pub fn course_stream(course_id: &str) -> String {
    format!("course:{course_id}")
}

pub fn plan_stream(plan_id: &str) -> String {
    format!("plan:{plan_id}")
}

/// Sessions are addressed as `{plan_id}.{session_id}`, e.g. `p1.s3`.
pub fn session_key(plan_id: &str, session_id: &str) -> String {
    format!("{plan_id}.{session_id}")
}

pub fn split_session_key(key: &str) -> Option<(&str, &str)> {
    key.split_once('.').filter(|(p, s)| !p.is_empty() && !s.is_empty())
}

pub fn session_stream(key: &str) -> String {
    format!("session:{key}")
}

/// Payload of a decision event. Accept and Modify carry the version they
/// created, so the decision and the new head land in one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionEvent {
    pub record: DecisionRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<StudyPlan>,
}

/// Typed access to the event log: profiles, courses, plan lineages,
/// proposals, decisions, session state and interaction logs.
#[derive(Debug)]
pub struct Repository {
    dir: PathBuf,
    log: EventLog,
    courses: Mutex<HashMap<String, Arc<Corpus>>>,
}

fn decode<T: DeserializeOwned>(event: &StoredEvent) -> Result<T, StorageError> {
    serde_json::from_value(event.payload.clone()).map_err(|e| {
        StorageError::Corrupt(format!(
            "{} #{} ({}) does not decode: {e}",
            event.stream_id, event.seq, event.kind
        ))
    })
}

fn encode<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("domain values always serialize")
}

impl Repository {
    /// Opens the store in `dir`, creating the directory if needed.
    pub fn open(dir: impl AsRef<Path>) -> Result<(Self, Recovery), StorageError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| StorageError::Io(format!("{}: {e}", dir.display())))?;
        let (log, recovery) = EventLog::open(dir.join(LOG_FILE))?;
        Ok((
            Self {
                dir,
                log,
                courses: Mutex::new(HashMap::new()),
            },
            recovery,
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn append<T: Serialize>(&self, stream: &str, kind: &str, value: &T, at: DateTime<Utc>) -> Result<u64, StorageError> {
        self.log.append(stream, kind, &encode(value), at)
    }

    fn latest<T: DeserializeOwned>(&self, stream: &str, kind: &str) -> Result<Option<T>, StorageError> {
        self.log
            .stream(stream)
            .iter()
            .rev()
            .find(|e| e.kind == kind)
            .map(decode)
            .transpose()
    }

    fn all_of<T: DeserializeOwned>(&self, stream: &str, kind: &str) -> Result<Vec<T>, StorageError> {
        self.log.stream(stream).iter().filter(|e| e.kind == kind).map(decode).collect()
    }

    pub fn put_profile(&self, profile: &LearnerProfile, at: DateTime<Utc>) -> Result<u64, StorageError> {
        self.append(&profile_stream(&profile.learner_id), kinds::PROFILE, profile, at)
    }

    pub fn profile(&self, learner_id: &str) -> Result<LearnerProfile, StorageError> {
        self.latest(&profile_stream(learner_id), kinds::PROFILE)?
            .ok_or_else(|| StorageError::NotFound(format!("learner `{learner_id}`")))
    }

    pub fn put_course(&self, corpus: &Corpus, at: DateTime<Utc>) -> Result<u64, StorageError> {
        let seq = self.append(&course_stream(corpus.course_id()), kinds::COURSE, corpus, at)?;
        self.courses
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(corpus.course_id().to_string(), Arc::new(corpus.clone()));
        Ok(seq)
    }

    pub fn course(&self, course_id: &str) -> Result<Arc<Corpus>, StorageError> {
        if let Some(c) = self.courses.lock().unwrap_or_else(|p| p.into_inner()).get(course_id) {
            return Ok(c.clone());
        }
        let corpus: Corpus = self
            .latest(&course_stream(course_id), kinds::COURSE)?
            .ok_or_else(|| StorageError::NotFound(format!("course `{course_id}`")))?;
        let corpus = Arc::new(corpus);
        self.courses
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(course_id.to_string(), corpus.clone());
        Ok(corpus)
    }

    pub fn plan_ids(&self) -> Vec<String> {
        self.log
            .streams_with_prefix("plan:")
            .into_iter()
            .map(|s| s["plan:".len()..].to_string())
            .collect()
    }

    /// `p{n}` for the next plan.
    pub fn next_plan_id(&self) -> String {
        format!("p{}", self.plan_ids().len() + 1)
    }

    /// Records a version produced outside a decision: the initial plan or an
    /// undo.
    pub fn append_plan_version(&self, plan: &StudyPlan, at: DateTime<Utc>) -> Result<u64, StorageError> {
        self.append(&plan_stream(&plan.plan_id), kinds::PLAN_VERSION, plan, at)
    }

    /// Every version of a plan, folded from its stream in write order.
    pub fn plan_versions(&self, plan_id: &str) -> Result<Vec<StudyPlan>, StorageError> {
        let events = self.log.stream(&plan_stream(plan_id));
        if events.is_empty() {
            return Err(StorageError::NotFound(format!("plan `{plan_id}`")));
        }
        let mut versions = Vec::new();
        for e in &events {
            match e.kind.as_str() {
                kinds::PLAN_VERSION => versions.push(decode::<StudyPlan>(e)?),
                kinds::DECISION => {
                    if let Some(plan) = decode::<DecisionEvent>(e)?.plan {
                        versions.push(plan);
                    }
                }
                _ => {}
            }
        }
        Ok(versions)
    }

    /// A stored version, or the head when `version` is `None`.
    pub fn load_plan_version(&self, plan_id: &str, version: Option<u32>) -> Result<StudyPlan, StorageError> {
        let mut versions = self.plan_versions(plan_id)?;
        match version {
            None => Ok(versions.pop().expect("a plan stream starts with a version")),
            Some(v) => versions
                .into_iter()
                .find(|p| p.version == v)
                .ok_or_else(|| StorageError::NotFound(format!("plan `{plan_id}` v{v}"))),
        }
    }

    pub fn decisions(&self, plan_id: &str) -> Result<Vec<DecisionRecord>, StorageError> {
        Ok(self
            .all_of::<DecisionEvent>(&plan_stream(plan_id), kinds::DECISION)?
            .into_iter()
            .map(|d| d.record)
            .collect())
    }

    pub fn history(&self, plan_id: &str) -> Result<PlanHistory, StorageError> {
        let versions = self.plan_versions(plan_id)?;
        let decisions = self.decisions(plan_id)?;
        PlanHistory::from_parts(versions, decisions)
            .ok_or_else(|| StorageError::Corrupt(format!("plan `{plan_id}` versions do not form a chain")))
    }

    pub fn list_history(&self, plan_id: &str) -> Result<Vec<HistoryEntry>, StorageError> {
        Ok(self.history(plan_id)?.list())
    }

    /// `{plan_id}.a{n}` for the next proposal on a plan.
    pub fn next_proposal_id(&self, plan_id: &str) -> Result<String, StorageError> {
        let n = self
            .log
            .stream(&plan_stream(plan_id))
            .iter()
            .filter(|e| e.kind == kinds::PROPOSAL)
            .count();
        Ok(format!("{plan_id}.a{}", n + 1))
    }

    pub fn put_proposal(&self, proposal: &AdaptationProposal) -> Result<u64, StorageError> {
        self.append(&plan_stream(&proposal.plan_id), kinds::PROPOSAL, proposal, proposal.created_at)
    }

    pub fn proposal(&self, proposal_id: &str) -> Result<AdaptationProposal, StorageError> {
        let not_found = || StorageError::NotFound(format!("proposal `{proposal_id}`"));
        let (plan_id, _) = proposal_id.rsplit_once('.').ok_or_else(not_found)?;
        self.all_of::<AdaptationProposal>(&plan_stream(plan_id), kinds::PROPOSAL)?
            .into_iter()
            .find(|p| p.proposal_id == proposal_id)
            .ok_or_else(not_found)
    }

    pub fn append_decision(&self, record: &DecisionRecord, plan: Option<&StudyPlan>) -> Result<u64, StorageError> {
        let event = DecisionEvent {
            record: record.clone(),
            plan: plan.cloned(),
        };
        self.append(&plan_stream(&record.plan_id), kinds::DECISION, &event, record.decided_at)
    }

    /// Persists a session after an operation: the interaction events beyond
    /// `persisted_log_len`, then a snapshot of the state without its log.
    pub fn save_session(&self, ctx: &SessionContext, persisted_log_len: usize, at: DateTime<Utc>) -> Result<(), StorageError> {
        let stream = session_stream(&session_key(&ctx.plan_id, &ctx.session_id));
        for event in &ctx.log[persisted_log_len.min(ctx.log.len())..] {
            self.append(&stream, kinds::INTERACTION, event, event.timestamp)?;
        }
        let snapshot = SessionContext {
            log: Vec::new(),
            ..ctx.clone()
        };
        self.append(&stream, kinds::SESSION_STATE, &snapshot, at)?;
        Ok(())
    }

    /// The latest state of a session with its full interaction log, or
    /// `None` if it was never started.
    pub fn session(&self, key: &str) -> Result<Option<SessionContext>, StorageError> {
        let stream = session_stream(key);
        let Some(mut ctx) = self.latest::<SessionContext>(&stream, kinds::SESSION_STATE)? else {
            return Ok(None);
        };
        ctx.log = self.interactions(key)?;
        Ok(Some(ctx))
    }

    pub fn interactions(&self, key: &str) -> Result<Vec<InteractionEvent>, StorageError> {
        self.all_of(&session_stream(key), kinds::INTERACTION)
    }

    /// Keys of the sessions of `plan_id` that have any stored state, in
    /// order of first activity.
    pub fn session_keys(&self, plan_id: &str) -> Vec<String> {
        self.log
            .streams_with_prefix(&format!("session:{plan_id}."))
            .into_iter()
            .map(|s| s["session:".len()..].to_string())
            .collect()
    }

    pub fn put_quiz_report(&self, report: &QuizReport, at: DateTime<Utc>) -> Result<u64, StorageError> {
        let key = session_key(&report.plan_id, &report.session_id);
        self.append(&session_stream(&key), kinds::QUIZ_REPORT, report, at)
    }

    pub fn quiz_report(&self, key: &str) -> Result<Option<QuizReport>, StorageError> {
        self.latest(&session_stream(key), kinds::QUIZ_REPORT)
    }

    /// The most recently written quiz report of any session of the plan.
    pub fn latest_quiz_report(&self, plan_id: &str) -> Result<Option<QuizReport>, StorageError> {
        let prefix = format!("session:{plan_id}.");
        self.log
            .all()
            .iter()
            .rev()
            .find(|e| e.kind == kinds::QUIZ_REPORT && e.stream_id.starts_with(&prefix))
            .map(decode)
            .transpose()
    }
}
