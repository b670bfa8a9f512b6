use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::CourseManifest;
use crate::domain::{LearnerProfile, Provenance, StudyPlan};
use crate::planmate::validate_plan;

use super::ops::{apply_ops, AdaptationOp, PlanChange};
use super::{AdaptError, AdaptationProposal};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "lowercase")]
pub enum Decision {
    Accept,
    /// Apply an edited list of changes instead of the proposal's.
    Modify {
        #[serde(alias = "ops")]
        changes: Vec<PlanChange>,
    },
    Reject,
}

impl Decision {
    pub fn name(&self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Modify { .. } => "modify",
            Decision::Reject => "reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub proposal_id: String,
    pub plan_id: String,
    pub base_version: u32,
    pub decision: Decision,
    pub decided_at: DateTime<Utc>,
    /// Version created by the decision; none for a rejection.
    pub resulting_version: Option<u32>,
    pub applied: Vec<PlanChange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub version: u32,
    pub parent_version: Option<u32>,
    pub provenance: Provenance,
    pub created_at: DateTime<Utc>,
    pub decided_at: Option<DateTime<Utc>>,
    pub proposal_id: Option<String>,
    pub summary: String,
}

/// The append-only version chain of one plan plus the decisions taken on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanHistory {
    versions: Vec<StudyPlan>,
    decisions: Vec<DecisionRecord>,
}

impl PlanHistory {
    pub fn new(initial: StudyPlan) -> Self {
        Self {
            versions: vec![initial],
            decisions: Vec::new(),
        }
    }

    /// Rebuilds a history from stored parts. Versions must form a chain
    /// starting at 0.
    pub fn from_parts(versions: Vec<StudyPlan>, decisions: Vec<DecisionRecord>) -> Option<Self> {
        let chained = !versions.is_empty() && versions.iter().enumerate().all(|(i, v)| v.version as usize == i);
        chained.then_some(Self { versions, decisions })
    }

    pub fn head(&self) -> &StudyPlan {
        self.versions.last().expect("a history has at least one version")
    }

    pub fn version(&self, version: u32) -> Option<&StudyPlan> {
        self.versions.get(version as usize)
    }

    pub fn versions(&self) -> &[StudyPlan] {
        &self.versions
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    /// Applies the learner's decision on `proposal`. Accept and Modify append
    /// a new adapted version; Reject only records the decision. On error the
    /// history is unchanged.
    pub fn apply_decision(
        &mut self,
        proposal: &AdaptationProposal,
        decision: Decision,
        profile: &LearnerProfile,
        manifest: &CourseManifest,
        now: DateTime<Utc>,
    ) -> Result<&DecisionRecord, AdaptError> {
        let head = self.head();
        if proposal.plan_id != head.plan_id {
            return Err(AdaptError::Mismatch(format!(
                "proposal `{}` is for plan `{}`",
                proposal.proposal_id, proposal.plan_id
            )));
        }
        if proposal.base_version != head.version {
            return Err(AdaptError::StaleProposal {
                base_version: proposal.base_version,
                head_version: head.version,
            });
        }
        let changes: Vec<PlanChange> = match &decision {
            Decision::Reject => {
                self.decisions.push(DecisionRecord {
                    proposal_id: proposal.proposal_id.clone(),
                    plan_id: head.plan_id.clone(),
                    base_version: head.version,
                    decision,
                    decided_at: now,
                    resulting_version: None,
                    applied: Vec::new(),
                });
                return Ok(self.decisions.last().expect("just pushed"));
            }
            Decision::Accept => proposal.changes.clone(),
            Decision::Modify { changes } => changes.clone(),
        };

        check_changes(head, &changes, proposal.created_at)?;
        let sessions = apply_ops(&head.sessions, changes.iter().map(|c| &c.op))?;
        let next = StudyPlan {
            version: head.version + 1,
            parent_version: Some(head.version),
            provenance: Provenance::Adapted,
            sessions,
            created_at: now,
            ..head.clone()
        };
        let report = validate_plan(&next, profile, manifest);
        if !report.ok {
            return Err(AdaptError::InvalidEdit {
                problems: vec!["the edited plan is not feasible".to_string()],
                report: Some(report),
            });
        }
        self.decisions.push(DecisionRecord {
            proposal_id: proposal.proposal_id.clone(),
            plan_id: next.plan_id.clone(),
            base_version: head.version,
            decision,
            decided_at: now,
            resulting_version: Some(next.version),
            applied: changes,
        });
        self.versions.push(next);
        Ok(self.decisions.last().expect("just pushed"))
    }

    /// Appends a version whose sessions equal those of the head's parent.
    pub fn undo(&mut self, now: DateTime<Utc>) -> Result<&StudyPlan, AdaptError> {
        let head = self.head();
        let Some(parent) = head.parent_version else {
            return Err(AdaptError::NothingToUndo);
        };
        let restored = self.versions[parent as usize].sessions.clone();
        let next = StudyPlan {
            version: head.version + 1,
            parent_version: Some(head.version),
            provenance: Provenance::Undo,
            sessions: restored,
            created_at: now,
            ..head.clone()
        };
        self.versions.push(next);
        Ok(self.head())
    }

    /// One entry per version, oldest first.
    pub fn list(&self) -> Vec<HistoryEntry> {
        self.versions
            .iter()
            .map(|v| {
                let record = self.decisions.iter().find(|d| d.resulting_version == Some(v.version));
                let summary = match v.provenance {
                    Provenance::Initial => format!("initial plan with {} sessions", v.sessions.len()),
                    Provenance::Undo => {
                        let undone = v.parent_version.unwrap_or(0);
                        let restored = self.versions[undone as usize].parent_version.unwrap_or(0);
                        format!("undid v{undone}, restoring the sessions of v{restored}")
                    }
                    Provenance::Adapted => match record {
                        Some(r) if !r.applied.is_empty() => {
                            let reasons: Vec<&str> = r.applied.iter().map(|c| c.rationale.text.as_str()).collect();
                            format!("{} change(s): {}", r.applied.len(), reasons.join(" "))
                        }
                        _ => "no changes".to_string(),
                    },
                };
                HistoryEntry {
                    version: v.version,
                    parent_version: v.parent_version,
                    provenance: v.provenance,
                    created_at: v.created_at,
                    decided_at: record.map(|r| r.decided_at),
                    proposal_id: record.map(|r| r.proposal_id.clone()),
                    summary,
                }
            })
            .collect()
    }
}

/// Structural rules every applied change list must meet: a rationale with
/// evidence on each change, and nothing that edits the past.
fn check_changes(head: &StudyPlan, changes: &[PlanChange], proposed_at: DateTime<Utc>) -> Result<(), AdaptError> {
    let mut problems = Vec::new();
    for (i, c) in changes.iter().enumerate() {
        if c.rationale.text.trim().is_empty() || c.rationale.evidence.is_empty() {
            problems.push(format!("change {i} has no rationale or evidence"));
        }
        match &c.op {
            AdaptationOp::AddSession { session } => {
                if session.start < proposed_at {
                    problems.push(format!("change {i} adds a session in the past"));
                }
            }
            op => {
                if let Some(s) = head.session(op.session_id()) {
                    if s.end < proposed_at {
                        problems.push(format!("change {i} edits past session `{}`", s.session_id));
                    }
                }
                if let AdaptationOp::MoveSession { start, .. } = op {
                    if *start < proposed_at {
                        problems.push(format!("change {i} moves a session into the past"));
                    }
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(AdaptError::InvalidEdit { problems, report: None })
    }
}
