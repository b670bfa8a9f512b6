//! Plan generation in two stages: a Planner agent drafts sessions from the
//! profile and course outline, then the draft is pinned to dates, checked,
//! repaired if needed, and rendered as calendar events.

mod calendar;
mod draft;
mod ics;
pub(crate) mod prompts;
mod repair;
mod validate;

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use crate::corpus::CourseManifest;
use crate::domain::{validate_profile, DomainError, LearnerProfile, Provenance, StudyPlan, ValidationReport};
use crate::provider::payloads::PlanDraftPayload;
use crate::provider::{complete_typed, Provider, ProviderError};

pub use calendar::{event_uid, plan_to_events, CalendarEvent};
pub use draft::{materialize, DraftDay, DraftSession, PlanDraft, WeekBlock};
pub use ics::{emit_ics, escape_text, fold_line, IcsError, PRODID};
pub use repair::{repair_deterministic, repair_plan, RepairOptions, DEFAULT_MAX_REPAIR_ROUNDS};
pub use validate::validate_plan;

/// Merged availability intervals covering `[from, to]`, with a day or two of
/// slack on each side.
pub fn availability_window(
    profile: &LearnerProfile,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> Vec<crate::domain::AvailabilityInterval> {
    validate::availability_between(profile, from, to)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("profile is invalid: {}", .0.render())]
    InvalidProfile(ValidationReport),
    #[error("profile has no availability windows")]
    NoAvailability,
    #[error("course has no lessons")]
    EmptyManifest,
    #[error("plan could not be repaired: {}", .0.render())]
    RepairExhausted(ValidationReport),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOptions {
    pub plan_id: String,
    /// First local date sessions may be placed on.
    pub start_date: NaiveDate,
    pub created_at: DateTime<Utc>,
    pub horizon_weeks: u32,
    pub max_repair_rounds: u32,
}

impl PlanOptions {
    pub fn new(plan_id: impl Into<String>, start_date: NaiveDate, created_at: DateTime<Utc>) -> Self {
        Self {
            plan_id: plan_id.into(),
            start_date,
            created_at,
            horizon_weeks: crate::domain::DEFAULT_HORIZON_WEEKS,
            max_repair_rounds: DEFAULT_MAX_REPAIR_ROUNDS,
        }
    }
}

/// Stage one only: asks the Planner agent for a draft.
pub fn draft_plan(
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    provider: &dyn Provider,
    options: &PlanOptions,
) -> Result<PlanDraft, PlanError> {
    check_inputs(profile, manifest)?;
    let envelope = prompts::planner_envelope(profile, manifest, options.start_date, options.horizon_weeks * 7);
    let payload: PlanDraftPayload = complete_typed(provider, &envelope, |p: &PlanDraftPayload| {
        PlanDraft::try_from(p).err().into_iter().collect()
    })?;
    Ok(PlanDraft::try_from(&payload).expect("checked in the completion"))
}

fn check_inputs(profile: &LearnerProfile, manifest: &CourseManifest) -> Result<(), PlanError> {
    if profile.availability.is_empty() {
        return Err(PlanError::NoAvailability);
    }
    let report = validate_profile(profile);
    if !report.ok {
        return Err(PlanError::InvalidProfile(report));
    }
    if manifest.lesson_count() == 0 {
        return Err(PlanError::EmptyManifest);
    }
    Ok(())
}

/// Drafts, materializes, validates and (if needed) repairs a new plan.
/// The result is version 0 with initial provenance and always passes
/// [`validate_plan`].
pub fn generate_plan(
    profile: &LearnerProfile,
    manifest: &CourseManifest,
    provider: &dyn Provider,
    options: &PlanOptions,
) -> Result<StudyPlan, PlanError> {
    let mut draft = draft_plan(profile, manifest, provider, options)?;
    // Session ids on a fresh plan are assigned by the engine.
    for session in &mut draft.proposed_sessions {
        session.session_id = None;
    }
    let sessions = materialize(&draft.proposed_sessions, profile, options.start_date, options.horizon_weeks * 7)?;
    let plan = StudyPlan {
        plan_id: options.plan_id.clone(),
        learner_id: profile.learner_id.clone(),
        course_id: manifest.course_id.clone(),
        version: 0,
        parent_version: None,
        provenance: Provenance::Initial,
        sessions,
        created_at: options.created_at,
    };
    let report = validate_plan(&plan, profile, manifest);
    if report.ok {
        return Ok(plan);
    }
    tracing::info!(violations = report.violations.len(), "draft plan needs repair");
    repair_plan(
        &plan,
        profile,
        manifest,
        provider,
        RepairOptions {
            max_rounds: options.max_repair_rounds,
            frozen_before: None,
        },
    )
}
