//! Shared domain types and the pure validation logic every other module uses.

mod availability;
mod plan;
mod profile;
mod report;
pub mod serde_fmt;

pub use availability::{
    merge_intervals, normalize_availability, normalize_availability_days, resolve_local,
    AvailabilityInterval, DEFAULT_HORIZON_WEEKS,
};
pub(crate) use plan::next_session_id;
pub use plan::{PlannedSession, Provenance, StudyPlan};
pub use profile::{validate_profile, Goals, LearnerProfile, LearningPath, Pace, WeeklyWindow, MIN_SESSION_MINUTES};
pub use report::{ValidationReport, Violation, ViolationCode};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("invalid timezone `{0}`")]
    InvalidTimezone(String),
}

/// Parses an IANA timezone name.
pub fn parse_timezone(name: &str) -> Result<chrono_tz::Tz, DomainError> {
    name.parse::<chrono_tz::Tz>()
        .map_err(|_| DomainError::InvalidTimezone(name.to_string()))
}
