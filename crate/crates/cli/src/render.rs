//! Plain-text renderings. Every line is derived from stored data only, so
//! output is identical across runs and machines.

use std::fmt::Write;

use learnmate_core::adaptmate::{AdaptationOp, AdaptationProposal, DecisionRecord, HistoryEntry, QuizReport};
use learnmate_core::corpus::format_timestamp;
use learnmate_core::domain::{PlannedSession, StudyPlan};
use learnmate_core::studymate::{SessionDigest, TierContent};
use learnmate_core::workflow::{CourseSummary, DecisionOutcome, SimulationOutcome, WorkflowError};

fn session_line(s: &PlannedSession) -> String {
    let start = s.local_start();
    format!(
        "  {:<5} {} {}-{} {}  unit {}  {}{}\n",
        s.session_id,
        start.format("%a %Y-%m-%d"),
        start.format("%H:%M"),
        s.local_end().format("%H:%M"),
        s.timezone,
        s.unit_id,
        s.lesson_ids.join(", "),
        s.title.as_deref().map(|t| format!("  \"{t}\"")).unwrap_or_default(),
    )
}

pub fn course(c: &CourseSummary) -> String {
    format!("course {}: {} ({} units, {} lessons)\n", c.course_id, c.title, c.units, c.lessons)
}

pub fn plan(p: &StudyPlan) -> String {
    let mut out = format!(
        "plan {} v{} ({}): {} sessions for {} in {}\n",
        p.plan_id,
        p.version,
        p.provenance.as_str(),
        p.sessions.len(),
        p.learner_id,
        p.course_id
    );
    for s in &p.sessions {
        out.push_str(&session_line(s));
    }
    out
}

fn tier(content: &TierContent) -> String {
    let mut out = format!("     + {}\n", content.tier.as_str());
    if let Some(text) = &content.text {
        let _ = writeln!(out, "       {text}");
    }
    for item in &content.items {
        let _ = writeln!(out, "       ? {} [{}]", item.stem, item.options.join(" | "));
    }
    for r in &content.resources {
        let _ = writeln!(out, "       - {} <{}> ({})", r.label, r.url, r.provenance_label.as_str());
    }
    out
}

pub fn simulation(sim: &SimulationOutcome, digest: &SessionDigest) -> String {
    let s = &sim.session;
    let mut out = format!("session {} ({})\n", s.session_key, s.lesson_ids.join(", "));
    if let Some(g) = &s.guidance {
        let _ = writeln!(out, "guidance: {g}");
    }
    for (i, a) in s.answers.iter().enumerate() {
        let _ = writeln!(out, "Q{}: {}", i + 1, a.question);
        let _ = writeln!(out, "   [{:?}] {}", a.scope_flag, a.text);
        for c in &a.citations {
            let ms = (c.start_s * 1000.0).round() as u64;
            let _ = writeln!(out, "   cite {} cue {} at {}", c.lesson_id, c.cue_index, format_timestamp(ms));
        }
        for content in a.expansions.values() {
            out.push_str(&tier(content));
        }
    }
    let _ = writeln!(out, "quiz {}:", sim.quiz.quiz_id);
    for (i, q) in sim.quiz.questions.iter().enumerate() {
        let picked = sim.outcome.result.answers[i];
        let key = sim.outcome.quiz.questions[i].correct_index;
        let mark = if picked == key { "right" } else { "wrong" };
        let _ = writeln!(out, "  {}. {} [{}] picked {} ({mark})", i + 1, q.stem, q.concept_tag, picked);
    }
    let r = &sim.outcome.result;
    let _ = writeln!(out, "score: {}/{} ({})", r.correct, r.total, r.score_display);
    out.push_str(&digest.text);
    if !digest.text.ends_with('\n') {
        out.push('\n');
    }
    out
}

pub fn report(r: &QuizReport, digest: &SessionDigest) -> String {
    let mut out = format!("quiz {} for {}: {}/{} ({})\n", r.quiz_id, r.session_id, r.correct, r.total, r.score_display);
    if r.weak_concepts.is_empty() {
        out.push_str("weak concepts: none\n");
    }
    for w in &r.weak_concepts {
        let missed: Vec<String> = w.question_indices.iter().map(|i| format!("Q{}", i + 1)).collect();
        let _ = writeln!(out, "weak: {} (missed {}; lessons {})", w.concept_tag, missed.join(", "), w.lesson_ids.join(", "));
    }
    let _ = writeln!(out, "analysis: {}", r.narrative);
    let _ = writeln!(out, "next: {}", digest.next_step);
    out
}

fn op(op: &AdaptationOp) -> String {
    let t = |d: &chrono::DateTime<chrono::Utc>| d.format("%Y-%m-%dT%H:%MZ").to_string();
    match op {
        AdaptationOp::AddSession { session } => format!(
            "add {} at {}-{} ({})",
            session.session_id,
            t(&session.start),
            session.end.format("%H:%MZ"),
            session.lesson_ids.join(", ")
        ),
        AdaptationOp::RemoveSession { session_id } => format!("remove {session_id}"),
        AdaptationOp::MoveSession { session_id, start, end } => {
            format!("move {session_id} to {}-{}", t(start), end.format("%H:%MZ"))
        }
        AdaptationOp::ResizeSession { session_id, end } => format!("resize {session_id} to end {}", t(end)),
        AdaptationOp::ReplaceContent {
            session_id, lesson_ids, ..
        } => format!("replace content of {session_id} with {}", lesson_ids.join(", ")),
    }
}

pub fn proposal(p: &AdaptationProposal) -> String {
    let mut out = format!(
        "proposal {} for {} v{}: {} changes\n",
        p.proposal_id,
        p.plan_id,
        p.base_version,
        p.changes.len()
    );
    for (i, c) in p.changes.iter().enumerate() {
        let _ = writeln!(out, "  {}. {}", i + 1, op(&c.op));
        let _ = writeln!(out, "     why: {}", c.rationale.text);
        let _ = writeln!(out, "     evidence: {}", c.rationale.evidence.join(", "));
    }
    out
}

pub fn decision(d: &DecisionOutcome) -> String {
    let r = &d.decision;
    let mut out = match r.resulting_version {
        Some(v) => format!(
            "{} {}: {} changes applied, v{} -> v{v}\n",
            r.decision.name(),
            r.proposal_id,
            r.applied.len(),
            r.base_version
        ),
        None => format!("{} {}: plan stays at v{}\n", r.decision.name(), r.proposal_id, d.plan.version),
    };
    out.push_str(&plan(&d.plan));
    out
}

pub fn history(entries: &[HistoryEntry], decisions: &[DecisionRecord]) -> String {
    let mut out = String::new();
    for e in entries {
        let parent = e.parent_version.map(|v| format!("v{v}")).unwrap_or_else(|| "-".into());
        let _ = write!(
            out,
            "v{:<3} {:<8} parent {:<4} {}",
            e.version,
            e.provenance.as_str(),
            parent,
            e.created_at.format("%Y-%m-%dT%H:%M:%SZ")
        );
        if let Some(p) = &e.proposal_id {
            let _ = write!(out, "  via {p}");
        }
        let _ = writeln!(out, "  {}", e.summary);
    }
    for d in decisions {
        let result = d.resulting_version.map(|v| format!("v{v}")).unwrap_or_else(|| "no new version".into());
        let _ = writeln!(
            out,
            "decision {} on {} (base v{}) at {}: {result}",
            d.decision.name(),
            d.proposal_id,
            d.base_version,
            d.decided_at.format("%Y-%m-%dT%H:%M:%SZ")
        );
    }
    out
}

pub fn error(e: &WorkflowError) -> String {
    let mut out = format!("error: {}: {}\n", e.code, e.message);
    let violations = e
        .detail
        .as_ref()
        .and_then(|d| d.get("violations").or_else(|| d.get("report").and_then(|r| r.get("violations"))))
        .and_then(|v| v.as_array());
    for v in violations.into_iter().flatten() {
        let code = v["code"].as_str().unwrap_or("?");
        let ids: Vec<&str> = v["session_ids"].as_array().into_iter().flatten().filter_map(|s| s.as_str()).collect();
        let field = v["field"].as_str().map(|f| format!(" field {f}")).unwrap_or_default();
        let scope = if ids.is_empty() { String::new() } else { format!(" [{}]", ids.join(", ")) };
        let _ = writeln!(out, "  - {code}{scope}{field}: {}", v["detail"].as_str().unwrap_or(""));
    }
    out
}
