use std::collections::HashSet;

use chrono::{NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use super::report::{ValidationReport, Violation, ViolationCode};
use super::serde_fmt;

/// Shortest session the planner will schedule, in minutes.
pub const MIN_SESSION_MINUTES: u32 = 15;

/// A learner's stated preferences along the four planning dimensions:
/// goals, time, pace and path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerProfile {
    pub learner_id: String,
    pub goals: Goals,
    pub availability: Vec<WeeklyWindow>,
    pub pace: Pace,
    pub max_session_minutes: u32,
    pub path: LearningPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goals {
    pub text: String,
    #[serde(default)]
    pub target_date: Option<NaiveDate>,
}

/// A recurring weekly slot in local wall-clock time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklyWindow {
    #[serde(with = "serde_fmt::weekday")]
    pub weekday: Weekday,
    #[serde(with = "serde_fmt::hhmm")]
    pub start_time: NaiveTime,
    #[serde(with = "serde_fmt::hhmm")]
    pub end_time: NaiveTime,
    pub timezone: String,
}

impl WeeklyWindow {
    pub fn minutes(&self) -> i64 {
        (self.end_time - self.start_time).num_minutes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pace {
    Relaxed,
    Standard,
    Intensive,
}

impl Pace {
    /// Share of available weekly time the planner should aim to fill.
    pub fn weekly_load_percent(self) -> u32 {
        match self {
            Pace::Relaxed => 50,
            Pace::Standard => 70,
            Pace::Intensive => 90,
        }
    }

    /// Preferred session length before the learner's cap is applied.
    pub fn default_session_minutes(self) -> u32 {
        match self {
            Pace::Relaxed => 30,
            Pace::Standard => 45,
            Pace::Intensive => 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearningPath {
    Sequential,
    Custom { unit_ids: Vec<String> },
}

impl LearnerProfile {
    /// Session length the planner aims for: the pace default, capped by the
    /// learner's maximum.
    pub fn target_session_minutes(&self) -> u32 {
        self.pace.default_session_minutes().min(self.max_session_minutes)
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self.path, LearningPath::Sequential)
    }
}

/// Checks every profile invariant and names the offending field for each
/// failure. Never errors; an empty report means the profile is usable.
pub fn validate_profile(profile: &LearnerProfile) -> ValidationReport {
    let mut violations = Vec::new();

    for (i, window) in profile.availability.iter().enumerate() {
        if window.start_time >= window.end_time {
            violations.push(Violation::field(
                ViolationCode::OutsideAvailability,
                format!("availability[{i}]"),
                format!(
                    "start_time {} must precede end_time {}",
                    serde_fmt::format_hhmm(window.start_time),
                    serde_fmt::format_hhmm(window.end_time)
                ),
            ));
        }
        if super::parse_timezone(&window.timezone).is_err() {
            violations.push(Violation::field(
                ViolationCode::OutsideAvailability,
                format!("availability[{i}].timezone"),
                format!("`{}` is not an IANA timezone", window.timezone),
            ));
        }
    }

    if profile.max_session_minutes < MIN_SESSION_MINUTES {
        violations.push(Violation::field(
            ViolationCode::TooLong,
            "max_session_minutes",
            format!(
                "{} is below the {MIN_SESSION_MINUTES}-minute minimum",
                profile.max_session_minutes
            ),
        ));
    }

    if let LearningPath::Custom { unit_ids } = &profile.path {
        let mut seen = HashSet::new();
        for unit_id in unit_ids {
            if !seen.insert(unit_id.as_str()) {
                violations.push(Violation::field(
                    ViolationCode::OrderViolation,
                    "path.unit_ids",
                    format!("unit `{unit_id}` listed more than once"),
                ));
            }
        }
    }

    ValidationReport::from_violations(violations)
}
