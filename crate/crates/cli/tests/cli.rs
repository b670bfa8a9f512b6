//! Runs the `learnmate` binary. Set UPDATE_GOLDEN=1 to rewrite the
//! committed transcript after an intentional change.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use serde_json::Value;

use learnmate_core::adaptmate::Decision;
use learnmate_core::canonical;
use learnmate_core::clock::ManualClock;
use learnmate_core::corpus::Corpus;
use learnmate_core::domain::{LearnerProfile, StudyPlan};
use learnmate_core::planmate::{emit_ics, plan_to_events};
use learnmate_core::provider::ScriptedProvider;
use learnmate_core::workflow::{calendar_name, SessionScript, Workspace, WorkspaceConfig};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/world_history")
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/golden_run.txt")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary from the fixture directory against `data`.
pub fn learnmate(data: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_learnmate"))
        .current_dir(fixtures())
        .env_remove("LEARNMATE_DATA_DIR")
        .env_remove("LEARNMATE_SCRIPT")
        .env_remove("LISTEN_ADDR")
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

const SCRIPT: &str = "--script=golden_script.json";

/// The reference run as a list of command lines.
pub const GOLDEN_STEPS: &[&[&str]] = &[
    &[SCRIPT, "--now=2025-09-05T12:00:00Z", "plan", "profile.json", "manifest.json"],
    &[SCRIPT, "--now=2025-09-08T00:00:00Z", "simulate", "p1", "s1", "session_s1.json"],
    &[SCRIPT, "report", "p1", "s1"],
    &[SCRIPT, "--now=2025-09-08T02:00:00Z", "adapt", "p1"],
    &[SCRIPT, "--now=2025-09-08T02:05:00Z", "decide", "p1.a1", "accept"],
    &[SCRIPT, "--now=2025-09-08T02:10:00Z", "undo", "p1"],
    &[SCRIPT, "history", "p1"],
    &[SCRIPT, "--format=json", "show", "p1", "--version=1"],
    &[SCRIPT, "export-ics", "p1"],
    &[SCRIPT, "decide", "p1.a1", "reject"],
];

/// Runs every golden step and returns the transcript of stdout, stderr and
/// exit codes.
pub fn golden_transcript(data: &Path) -> String {
    let mut out = String::new();
    for step in GOLDEN_STEPS {
        let run = learnmate(data, step);
        out.push_str(&format!("$ learnmate {}\n", step.join(" ")));
        out.push_str(&run.stdout);
        if !run.stderr.is_empty() {
            out.push_str("[stderr]\n");
            out.push_str(&run.stderr);
        }
        out.push_str(&format!("[exit {}]\n\n", run.code));
    }
    out
}

fn at(text: &str) -> DateTime<Utc> {
    text.parse().unwrap()
}

/// The same run through the workspace API in one process.
fn direct_golden(dir: &Path) {
    let read = |name: &str| std::fs::read_to_string(fixtures().join(name)).unwrap();
    let provider = Arc::new(ScriptedProvider::from_json(&read("golden_script.json")).unwrap());
    let clock = Arc::new(ManualClock::with_tick(at("2025-09-05T12:00:00Z"), Duration::seconds(30)));
    let (ws, _) = Workspace::open(dir, provider, clock.clone(), WorkspaceConfig::default()).unwrap();
    ws.ingest_path(&fixtures().join("manifest.json")).unwrap();
    let profile: LearnerProfile = serde_json::from_str(&read("profile.json")).unwrap();
    ws.put_profile(&profile).unwrap();
    ws.create_plan("learner-1", "world-history-era2").unwrap();
    let script: SessionScript = serde_json::from_str(&read("session_s1.json")).unwrap();
    clock.set(at("2025-09-08T00:00:00Z"));
    ws.simulate("p1.s1", &script).unwrap();
    clock.set(at("2025-09-08T02:00:00Z"));
    let proposal = ws.propose("p1").unwrap();
    clock.set(at("2025-09-08T02:05:00Z"));
    ws.decide(&proposal.proposal_id, Decision::Accept).unwrap();
    clock.set(at("2025-09-08T02:10:00Z"));
    ws.undo("p1").unwrap();
}

#[test]
fn golden_run_is_byte_identical_across_executions() {
    cli_determinism();
}

pub fn cli_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = golden_transcript(a.path());
    let second = golden_transcript(b.path());
    assert_eq!(first, second);
    let log_a = std::fs::read(a.path().join("events.log")).unwrap();
    assert_eq!(log_a, std::fs::read(b.path().join("events.log")).unwrap());

    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &first).unwrap();
    }
    let committed = std::fs::read_to_string(golden_path()).expect("golden_run.txt; run with UPDATE_GOLDEN=1");
    assert_eq!(committed, first);
}

#[test]
fn cli_state_equals_the_direct_module_run() {
    cli_matches_direct_run();
}

pub fn cli_matches_direct_run() {
    let cli = tempfile::tempdir().unwrap();
    for step in &GOLDEN_STEPS[..6] {
        assert_eq!(learnmate(cli.path(), step).code, 0, "{step:?}");
    }
    let direct = tempfile::tempdir().unwrap();
    direct_golden(direct.path());
    let a = std::fs::read(cli.path().join("events.log")).unwrap();
    let b = std::fs::read(direct.path().join("events.log")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn golden_transcript_shows_the_expected_milestones() {
    let text = std::fs::read_to_string(golden_path()).unwrap();
    for needle in [
        "plan p1 v0 (initial): 4 sessions",
        "[InScope] At 4:35 ",
        "cite era2-l1 cue 5 at 4:35",
        "[OutOfScope]",
        "score: 3/4 (75.0%)",
        "weak: food-surplus-and-farming",
        "accept p1.a1: 1 changes applied, v0 -> v1",
        "plan p1 v2 (undo): 4 sessions",
        "BEGIN:VCALENDAR\r\n",
        "error: AlreadyDecided",
        "[exit 2]",
    ] {
        assert!(text.contains(needle), "missing {needle:?}");
    }
}

#[test]
fn plan_prints_the_id_and_session_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = learnmate(dir.path(), GOLDEN_STEPS[0]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.starts_with("plan p1 v0 (initial): 4 sessions"));
    assert_eq!(run.stdout.lines().count(), 5);
    assert!(run.stderr.is_empty());
}

#[test]
fn plan_without_availability_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let run = learnmate(dir.path(), &[SCRIPT, "plan", "profile_no_availability.json", "manifest.json"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("NoAvailability"), "{}", run.stderr);
    assert!(run.stdout.is_empty());
}

#[test]
fn missing_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let run = learnmate(dir.path(), &[SCRIPT, "plan", "profile.json", "no-such-manifest.json"]);
    assert_eq!(run.code, 1, "{}", run.stderr);
    let run = learnmate(dir.path(), &["--script=missing.json", "plan", "profile.json", "manifest.json"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("does not exist"));
    assert_eq!(learnmate(dir.path(), &["frobnicate"]).code, 1);
    assert_eq!(learnmate(dir.path(), &["plan", "profile.json"]).code, 1);
    let help = learnmate(dir.path(), &["--help"]);
    assert_eq!(help.code, 0);
    for cmd in ["ingest", "plan", "export-ics", "simulate", "history", "report", "adapt", "decide", "undo", "serve"] {
        assert!(help.stdout.contains(cmd), "{cmd}");
    }
}

#[test]
fn no_script_and_no_credentials_is_a_provider_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_learnmate"))
        .current_dir(fixtures())
        .env_remove("PROVIDER_BASE_URL")
        .env_remove("LEARNMATE_SCRIPT")
        .arg("--data-dir")
        .arg(dir.path())
        .args(["plan", "profile.json", "manifest.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ProviderUnavailable"));
}

#[test]
fn session_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for step in &GOLDEN_STEPS[..2] {
        assert_eq!(learnmate(dir.path(), step).code, 0);
    }
    let again = learnmate(dir.path(), GOLDEN_STEPS[1]);
    assert_eq!(again.code, 2);
    assert!(again.stderr.contains("IllegalTransition"), "{}", again.stderr);

    let short = dir.path().join("short.json");
    std::fs::write(&short, r#"{"questions":[],"quiz_answers":[0,1]}"#).unwrap();
    let short = short.to_str().unwrap();
    // The golden script has no replies for s2.
    let run = learnmate(dir.path(), &[SCRIPT, "--now=2025-09-08T03:00:00Z", "simulate", "p1", "s2", short]);
    assert_eq!(run.code, 1, "{}", run.stderr);
    assert!(run.stderr.contains("MissingFixture"));
}

#[test]
fn wrong_number_of_quiz_answers_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(learnmate(dir.path(), GOLDEN_STEPS[0]).code, 0);
    let script: Value = serde_json::from_str(&std::fs::read_to_string(fixtures().join("session_s1.json")).unwrap()).unwrap();
    let mut wrong = script.clone();
    wrong["quiz_answers"] = serde_json::json!([1, 1, 3]);
    let path = dir.path().join("wrong.json");
    std::fs::write(&path, wrong.to_string()).unwrap();
    let run = learnmate(
        dir.path(),
        &[SCRIPT, "--now=2025-09-08T00:00:00Z", "simulate", "p1", "s1", path.to_str().unwrap()],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("LengthMismatch"), "{}", run.stderr);
}

#[test]
fn export_matches_the_emitter_and_the_out_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(learnmate(dir.path(), GOLDEN_STEPS[0]).code, 0);
    let stdout = learnmate(dir.path(), &["export-ics", "p1"]).stdout;
    let file = dir.path().join("p1.ics");
    assert_eq!(learnmate(dir.path(), &["export-ics", "p1", "--out", file.to_str().unwrap()]).code, 0);
    assert_eq!(std::fs::read(&file).unwrap(), stdout.as_bytes());

    let json = learnmate(dir.path(), &["--format=json", "show", "p1"]);
    let plan: StudyPlan = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(json.stdout, format!("{}\n", canonical::to_string(&plan)));
    let corpus = Corpus::load(&fixtures().join("manifest.json")).unwrap();
    let want = emit_ics(&plan_to_events(&plan, corpus.manifest()), &calendar_name(&corpus.manifest().title)).unwrap();
    assert_eq!(stdout.as_bytes(), want);
    assert_eq!(learnmate(dir.path(), &["export-ics", "p7"]).code, 1);
}

#[test]
fn modify_keeps_selected_changes_and_json_errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    for step in &GOLDEN_STEPS[..4] {
        assert_eq!(learnmate(dir.path(), step).code, 0);
    }
    let run = learnmate(dir.path(), &["decide", "p1.a1", "modify", "--keep", "2"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("no change #2"));
    let run = learnmate(dir.path(), &["decide", "p1.a1", "modify"]);
    assert_eq!(run.code, 1);

    let run = learnmate(dir.path(), &["--format=json", "--now=2025-09-08T02:05:00Z", "decide", "p1.a1", "modify", "--keep", "1"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let outcome: Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(outcome["plan"]["version"], 1);
    assert_eq!(outcome["decision"]["decision"]["decision"], "modify");

    let run = learnmate(dir.path(), &["--format=json", "decide", "p1.a1", "accept"]);
    assert_eq!(run.code, 2);
    let err: Value = serde_json::from_str(&run.stderr).unwrap();
    assert_eq!(err["code"], "AlreadyDecided");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn storage_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(learnmate(dir.path(), GOLDEN_STEPS[0]).code, 0);
    let log = dir.path().join("events.log");
    let mut bytes = std::fs::read(&log).unwrap();
    bytes[10] ^= 0xff;
    std::fs::write(&log, &bytes).unwrap();
    let run = learnmate(dir.path(), &["history", "p1"]);
    assert_eq!(run.code, 3, "{}", run.stderr);

    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, b"x").unwrap();
    assert_eq!(learnmate(&file, &["history", "p1"]).code, 3);
}

#[test]
fn torn_tail_is_reported_and_dropped() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(learnmate(dir.path(), GOLDEN_STEPS[0]).code, 0);
    let log = dir.path().join("events.log");
    let mut bytes = std::fs::read(&log).unwrap();
    bytes.extend_from_slice(&[0, 0, 0, 40, b'{']);
    std::fs::write(&log, &bytes).unwrap();
    let run = learnmate(dir.path(), &["history", "p1"]);
    assert_eq!(run.code, 0);
    assert!(run.stderr.contains("dropped 5 bytes"), "{}", run.stderr);
    assert!(learnmate(dir.path(), &["history", "p1"]).stderr.is_empty());
}
