use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    Overlap,
    OutsideAvailability,
    TooLong,
    OrderViolation,
    UnknownLesson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(default)]
    pub session_ids: Vec<String>,
    /// Offending profile field, for profile-level violations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub detail: String,
}

impl Violation {
    pub fn sessions(code: ViolationCode, session_ids: Vec<String>, detail: impl Into<String>) -> Self {
        Self {
            code,
            session_ids,
            field: None,
            detail: detail.into(),
        }
    }

    pub fn field(code: ViolationCode, field: impl Into<String>, detail: impl Into<String>) -> Self {
        let field = field.into();
        Self {
            code,
            session_ids: Vec::new(),
            detail: format!("{field}: {}", detail.into()),
            field: Some(field),
        }
    }
}

/// Outcome of a feasibility or profile check. `ok` holds exactly when
/// `violations` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn ok() -> Self {
        Self::from_violations(Vec::new())
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    /// One line per violation, for terminal output.
    pub fn render(&self) -> String {
        if self.ok {
            return "ok".to_string();
        }
        self.violations
            .iter()
            .map(|v| {
                if v.session_ids.is_empty() {
                    format!("{:?}: {}", v.code, v.detail)
                } else {
                    format!("{:?} [{}]: {}", v.code, v.session_ids.join(", "), v.detail)
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
