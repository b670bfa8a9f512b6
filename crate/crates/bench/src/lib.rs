//! Fixture loading shared by the benchmarks.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use learnmate_core::corpus::Corpus;
use learnmate_core::domain::{LearnerProfile, StudyPlan};
use learnmate_core::planmate::{generate_plan, PlanOptions};
use learnmate_core::provider::{Concept, FixtureAuthor};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/world_history")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

pub fn corpus() -> Corpus {
    Corpus::load(&fixtures().join("manifest.json")).unwrap()
}

pub fn profile() -> LearnerProfile {
    serde_json::from_str(&read("profile.json")).unwrap()
}

pub fn author() -> FixtureAuthor {
    let concepts: Vec<Concept> = serde_json::from_str(&read("concepts.json")).unwrap();
    FixtureAuthor::new(concepts)
}

pub fn now() -> DateTime<Utc> {
    "2025-09-05T12:00:00Z".parse().unwrap()
}

pub fn options() -> PlanOptions {
    PlanOptions::new("p1", now().date_naive(), now())
}

pub fn plan(corpus: &Corpus) -> StudyPlan {
    generate_plan(&profile(), corpus.manifest(), &author(), &options()).unwrap()
}
