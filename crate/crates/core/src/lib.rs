//! Workflow engine for a closed study loop: plan from learner preferences,
//! study with transcript-grounded help, take a quiz, and adapt the plan under
//! the learner's control.

pub mod canonical;
pub mod clock;
pub mod corpus;
pub mod domain;
pub mod provider;
pub mod planmate;
pub mod studymate;
pub mod adaptmate;
pub mod persistence;
pub mod workflow;
