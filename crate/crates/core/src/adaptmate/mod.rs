//! Plan adaptation under learner control: quiz analysis, signal
//! aggregation, agent-proposed changes checked by the planning pipeline, and
//! a versioned history with accept, modify, reject and undo.

mod history;
mod ops;
mod prompts;
mod propose;
mod report;
mod signal;

use thiserror::Error;

use crate::domain::ValidationReport;
use crate::planmate::PlanError;
use crate::provider::ProviderError;

pub use history::{Decision, DecisionRecord, HistoryEntry, PlanHistory};
pub use ops::{apply_ops, diff_sessions, AdaptationOp, PlanChange, Rationale};
pub use propose::{propose_adaptation, relearn_proposal, AdaptationProposal, ProposeOptions};
pub use report::{analyze_quiz, weak_concepts, QuizReport, WeakConcept};
pub use signal::{build_signal, AdaptationSignal, CompletionRecord, CompletionStatus, Coverage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptError {
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("lineage mismatch: {0}")]
    LineageMismatch(String),
    #[error("proposal is based on v{base_version} but the plan head is v{head_version}")]
    StaleProposal { base_version: u32, head_version: u32 },
    #[error("edit rejected: {}", problems.join("; "))]
    InvalidEdit {
        problems: Vec<String>,
        report: Option<ValidationReport>,
    },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl AdaptError {
    pub(crate) fn invalid(problem: impl Into<String>) -> Self {
        AdaptError::InvalidEdit {
            problems: vec![problem.into()],
            report: None,
        }
    }
}
