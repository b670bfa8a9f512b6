#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use learnmate_core::adaptmate::Decision;
use learnmate_core::clock::ManualClock;
use learnmate_core::domain::LearnerProfile;
use learnmate_core::provider::{Concept, FixtureAuthor, Provider};
use learnmate_core::workflow::{SessionScript, Workspace, WorkspaceConfig};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/world_history")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

pub fn at(text: &str) -> DateTime<Utc> {
    text.parse().unwrap()
}

pub fn profile() -> LearnerProfile {
    serde_json::from_str(&read("profile.json")).unwrap()
}

pub fn author() -> FixtureAuthor {
    let concepts: Vec<Concept> = serde_json::from_str(&read("concepts.json")).unwrap();
    FixtureAuthor::new(concepts)
}

pub fn session_script() -> SessionScript {
    serde_json::from_str(&read("session_s1.json")).unwrap()
}

/// The reference run: plan, one scripted session, adaptation, accept, undo.
/// Times match the command-line walkthrough in the README.
pub fn golden_flow(dir: &Path, provider: Arc<dyn Provider>) -> Workspace {
    let clock = Arc::new(ManualClock::with_tick(at("2025-09-05T12:00:00Z"), Duration::seconds(30)));
    let (ws, _) = Workspace::open(dir, provider, clock.clone(), WorkspaceConfig::default()).unwrap();
    ws.ingest_path(&fixtures().join("manifest.json")).unwrap();
    ws.put_profile(&profile()).unwrap();
    let plan = ws.create_plan("learner-1", "world-history-era2").unwrap();
    assert_eq!(plan.plan_id, "p1");

    clock.set(at("2025-09-08T00:00:00Z"));
    ws.simulate("p1.s1", &session_script()).unwrap();

    clock.set(at("2025-09-08T02:00:00Z"));
    let proposal = ws.propose("p1").unwrap();
    clock.set(at("2025-09-08T02:05:00Z"));
    ws.decide(&proposal.proposal_id, Decision::Accept).unwrap();
    clock.set(at("2025-09-08T02:10:00Z"));
    ws.undo("p1").unwrap();
    ws
}

pub mod gen;
pub mod oracle;
