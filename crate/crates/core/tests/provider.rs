//! Provider boundary: scripted replay and payload validation.

mod common;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use learnmate_core::provider::schema::ids;
use learnmate_core::provider::{
    validate_payload, AgentKind, ContextBlock, PromptEnvelope, Provider, ProviderError, ScriptedProvider,
};

use common::gen;

const AGENTS: [AgentKind; 7] = [
    AgentKind::Planner,
    AgentKind::PlanRepair,
    AgentKind::QA,
    AgentKind::TierExpand,
    AgentKind::QuizGen,
    AgentKind::QuizAnalysis,
    AgentKind::Adaptation,
];

fn envelope(rng: &mut ChaCha8Rng, i: usize) -> PromptEnvelope {
    let mut b = PromptEnvelope::builder(*AGENTS.choose(rng).unwrap())
        .system(format!("system {}", rng.gen_range(0..3)))
        .user(format!("request {i}"))
        .schema(*ids::ALL.choose(rng).unwrap());
    for k in 0..rng.gen_range(0..3) {
        b = b.block(ContextBlock::new(format!("block{k}"), format!("text {}", rng.gen_range(0..100))));
    }
    b.build()
}

/// Sends `calls` in the given order and groups the replies by request hash.
fn transcript(provider: &ScriptedProvider, calls: &[&PromptEnvelope]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in calls {
        let reply = provider.send(e).unwrap();
        out.entry(e.request_hash().to_string()).or_default().push(reply.text);
    }
    out
}

#[test]
fn scripted_replies_do_not_depend_on_call_order() {
    let mut rng = gen::rng(0x0de);
    let envelopes: Vec<PromptEnvelope> = (0..50).map(|i| envelope(&mut rng, i)).collect();
    let mut script = Map::new();
    for e in &envelopes {
        let replies: Vec<String> = (0..rng.gen_range(1..=3)).map(|k| format!("{{\"n\":{k}}}")).collect();
        let entry = if replies.len() == 1 { json!(replies[0]) } else { json!(replies) };
        script.insert(e.request_hash().to_string(), entry);
    }
    let script = Value::Object(script).to_string();
    let calls: Vec<&PromptEnvelope> = envelopes.iter().flat_map(|e| vec![e; rng.gen_range(1..=4)]).collect();

    let reference = transcript(&ScriptedProvider::from_json(&script).unwrap(), &calls);
    for _ in 0..20 {
        let mut shuffled = calls.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(transcript(&ScriptedProvider::from_json(&script).unwrap(), &shuffled), reference);
    }

    let unknown = PromptEnvelope::builder(AgentKind::QA).user("not scripted").schema(ids::QA_ANSWER).build();
    match ScriptedProvider::from_json(&script).unwrap().send(&unknown) {
        Err(ProviderError::MissingFixture { request_hash, agent }) => {
            assert_eq!(request_hash, unknown.request_hash());
            assert_eq!(agent, AgentKind::QA);
        }
        other => panic!("{other:?}"),
    }
}

/// The oracle's own description of each payload shape.
#[derive(Clone)]
enum Rule {
    Text { blank_ok: bool },
    Date,
    Time,
    Int(i64, i64),
    OneOf(&'static [&'static str]),
    List(Box<Rule>, usize, Option<usize>),
    Record(Vec<(&'static str, bool, Rule)>),
}

const DAYS: &[&str] = &["mon", "tue", "wed", "thu", "fri", "sat", "sun"];
const OPS: &[&str] = &["add_session", "remove_session", "move_session", "resize_session", "replace_content"];

fn text() -> Rule {
    Rule::Text { blank_ok: false }
}

fn list(item: Rule, min: usize) -> Rule {
    Rule::List(Box::new(item), min, None)
}

fn session(date_required: bool) -> Rule {
    Rule::Record(vec![
        ("session_id", false, text()),
        ("title", false, text()),
        ("weekday", false, Rule::OneOf(DAYS)),
        ("date", date_required, Rule::Date),
        ("start_time", true, Rule::Time),
        ("duration_minutes", true, Rule::Int(1, 1440)),
        ("unit_id", true, text()),
        ("lesson_ids", true, list(text(), 1)),
        ("objectives", false, list(Rule::Text { blank_ok: true }, 0)),
        ("tips", false, list(Rule::Text { blank_ok: true }, 0)),
    ])
}

fn mcq(with_refs: bool) -> Rule {
    let mut fields = vec![
        ("stem", true, text()),
        ("options", true, Rule::List(Box::new(text()), 4, Some(4))),
        ("correct_index", true, Rule::Int(0, 3)),
        ("concept_tag", true, text()),
    ];
    if with_refs {
        fields.push((
            "source_refs",
            true,
            list(Rule::Record(vec![("lesson_id", true, text()), ("cue_index", true, Rule::Int(0, i64::MAX))]), 1),
        ));
    }
    Rule::Record(fields)
}

fn rule(schema: &str) -> Rule {
    match schema {
        ids::PLAN_DRAFT => Rule::Record(vec![
            (
                "week_blocks",
                false,
                list(Rule::Record(vec![("label", true, text()), ("narrative", false, Rule::Text { blank_ok: true })]), 0),
            ),
            ("sessions", true, list(session(false), 0)),
        ]),
        ids::PLAN_REPAIR => Rule::Record(vec![("sessions", true, list(session(true), 0))]),
        ids::GUIDANCE => Rule::Record(vec![("guidance", true, text()), ("focus_points", false, list(text(), 0))]),
        ids::QA_ANSWER => Rule::Record(vec![("answer", true, text())]),
        ids::TIER_DETAILS => Rule::Record(vec![("text", true, text())]),
        ids::TIER_PRACTICE => Rule::Record(vec![("questions", true, list(mcq(false), 1))]),
        ids::TIER_RESOURCES => Rule::Record(vec![(
            "resources",
            true,
            list(Rule::Record(vec![("url", true, text()), ("label", true, text())]), 0),
        )]),
        ids::QUIZ => Rule::Record(vec![("questions", true, list(mcq(true), 1))]),
        ids::QUIZ_ANALYSIS => Rule::Record(vec![("narrative", true, text()), ("mentioned_concepts", true, list(text(), 0))]),
        ids::ADAPTATION => Rule::Record(vec![(
            "ops",
            true,
            list(
                Rule::Record(vec![
                    ("op", true, Rule::OneOf(OPS)),
                    ("session_id", false, text()),
                    ("title", false, text()),
                    ("date", false, Rule::Date),
                    ("start_time", false, Rule::Time),
                    ("duration_minutes", false, Rule::Int(1, 1440)),
                    ("unit_id", false, text()),
                    ("lesson_ids", false, list(text(), 1)),
                    ("objectives", false, list(Rule::Text { blank_ok: true }, 0)),
                    ("tips", false, list(Rule::Text { blank_ok: true }, 0)),
                    ("rationale", true, text()),
                    ("evidence", true, list(text(), 1)),
                ]),
                0,
            ),
        )]),
        other => panic!("no rule for {other}"),
    }
}

fn digits(s: &str, n: usize) -> Option<u32> {
    (s.len() == n && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse().unwrap())
}

fn is_date(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    let [y, m, d] = parts[..] else { return false };
    let (Some(y), Some(m), Some(d)) = (digits(y, 4), digits(m, 2), digits(d, 2)) else {
        return false;
    };
    let leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let days = [31, if leap { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    (1..=12).contains(&m) && d >= 1 && d <= days[m as usize - 1]
}

fn is_time(s: &str) -> bool {
    let parts: Vec<Option<u32>> = s.split(':').map(|p| digits(p, 2)).collect();
    match parts[..] {
        [Some(h), Some(m)] => h < 24 && m < 60,
        [Some(h), Some(m), Some(sec)] => h < 24 && m < 60 && sec < 60,
        _ => false,
    }
}

fn present(v: &Value, key: &str) -> bool {
    v.get(key).is_some_and(|x| !x.is_null())
}

fn fits(value: &Value, rule: &Rule) -> bool {
    match rule {
        Rule::Text { blank_ok } => value.as_str().is_some_and(|s| *blank_ok || !s.trim().is_empty()),
        Rule::Date => value.as_str().is_some_and(|s| !s.trim().is_empty() && is_date(s)),
        Rule::Time => value.as_str().is_some_and(|s| !s.trim().is_empty() && is_time(s)),
        Rule::Int(lo, hi) => value.as_i64().is_some_and(|n| *lo <= n && n <= *hi),
        Rule::OneOf(allowed) => value.as_str().is_some_and(|s| allowed.contains(&s)),
        Rule::List(item, min, max) => value
            .as_array()
            .is_some_and(|a| a.len() >= *min && max.is_none_or(|m| a.len() <= m) && a.iter().all(|x| fits(x, item))),
        Rule::Record(fields) => {
            let Some(obj) = value.as_object() else { return false };
            fields.iter().all(|(name, required, r)| match obj.get(*name) {
                None | Some(Value::Null) => !required,
                Some(v) => fits(v, r),
            })
        }
    }
}

fn oracle_accepts(value: &Value, schema: &str) -> bool {
    if !fits(value, &rule(schema)) {
        return false;
    }
    match schema {
        ids::PLAN_DRAFT => value["sessions"]
            .as_array()
            .unwrap()
            .iter()
            .all(|s| present(s, "weekday") != present(s, "date")),
        ids::ADAPTATION => value["ops"].as_array().unwrap().iter().all(|op| {
            let needs: &[&str] = match op["op"].as_str().unwrap() {
                "add_session" => &["date", "start_time", "duration_minutes", "lesson_ids"],
                "remove_session" => &["session_id"],
                "move_session" => &["session_id", "date", "start_time"],
                "resize_session" => &["session_id", "duration_minutes"],
                _ => &["session_id", "lesson_ids"],
            };
            needs.iter().all(|k| present(op, k))
        }),
        _ => true,
    }
}

fn valid(schema: &str) -> Value {
    let q = json!({"stem": "Which?", "options": ["a", "b", "c", "d"], "correct_index": 2, "concept_tag": "farming"});
    let mut quiz_q = q.clone();
    quiz_q["source_refs"] = json!([{"lesson_id": "era2-l1", "cue_index": 5}]);
    let s = json!({
        "title": "River valleys", "weekday": "tue", "start_time": "19:00", "duration_minutes": 60,
        "unit_id": "2.2", "lesson_ids": ["era2-l3"], "objectives": ["", "Explain irrigation"], "tips": [],
    });
    let mut dated = s.clone();
    dated.as_object_mut().unwrap().remove("weekday");
    dated["date"] = json!("2025-09-09");
    match schema {
        ids::PLAN_DRAFT => json!({"week_blocks": [{"label": "Week 1", "narrative": ""}], "sessions": [s, dated]}),
        ids::PLAN_REPAIR => json!({"sessions": [dated.clone(), dated]}),
        ids::GUIDANCE => json!({"guidance": "Start with farming.", "focus_points": ["surplus"]}),
        ids::QA_ANSWER => json!({"answer": "Because of surplus."}),
        ids::TIER_DETAILS => json!({"text": "More."}),
        ids::TIER_PRACTICE => json!({"questions": [q.clone(), q]}),
        ids::TIER_RESOURCES => json!({"resources": [{"url": "https://example.org", "label": "Read"}]}),
        ids::QUIZ => json!({"questions": [quiz_q.clone(), quiz_q.clone(), quiz_q.clone(), quiz_q]}),
        ids::QUIZ_ANALYSIS => json!({"narrative": "You missed farming.", "mentioned_concepts": ["farming"]}),
        ids::ADAPTATION => json!({"ops": [
            {"op": "add_session", "title": "Review", "date": "2025-09-16", "start_time": "19:00",
             "duration_minutes": 45, "lesson_ids": ["era2-l1"], "rationale": "Missed farming.",
             "evidence": ["weak_concept:farming"]},
            {"op": "move_session", "session_id": "s3", "date": "2025-09-18", "start_time": "19:30:00",
             "rationale": "Ran over.", "evidence": ["completion:s2"]},
            {"op": "resize_session", "session_id": "s4", "duration_minutes": 30,
             "rationale": "Shorter.", "evidence": ["completion:s1"]},
        ]}),
        other => panic!("{other}"),
    }
}

/// Paths to every node below the root.
fn paths(value: &Value, at: Vec<String>, out: &mut Vec<Vec<String>>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let mut p = at.clone();
                p.push(k.clone());
                out.push(p.clone());
                paths(v, p, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                let mut p = at.clone();
                p.push(i.to_string());
                out.push(p.clone());
                paths(v, p, out);
            }
        }
        _ => {}
    }
}

fn node<'a>(value: &'a mut Value, path: &[String]) -> &'a mut Value {
    path.iter().fold(value, |v, k| match v {
        Value::Array(items) => &mut items[k.parse::<usize>().unwrap()],
        other => &mut other[k.as_str()],
    })
}

const REPLACEMENTS: &[fn() -> Value] = &[
    || Value::Null,
    || json!(""),
    || json!("  "),
    || json!("x"),
    || json!(0),
    || json!(-1),
    || json!(4),
    || json!(1441),
    || json!(2.5),
    || json!(true),
    || json!([]),
    || json!({}),
    || json!("2025-02-29"),
    || json!("2024-02-29"),
    || json!("2025-13-01"),
    || json!("25:00"),
    || json!("07:45"),
    || json!("07:45:30"),
    || json!("1900"),
    || json!("sun"),
    || json!("funday"),
    || json!("remove_session"),
    || json!("teleport_session"),
    || json!(["a"]),
    || json!(["a", "b", "c", "d"]),
];

fn mutate(rng: &mut ChaCha8Rng, value: &mut Value) {
    let mut all = Vec::new();
    paths(value, Vec::new(), &mut all);
    let Some(path) = all.choose(rng).cloned() else { return };
    let (parent_path, last) = path.split_at(path.len() - 1);
    let parent = node(value, parent_path);
    match rng.gen_range(0..10) {
        0 => match parent {
            Value::Object(map) => {
                map.remove(&last[0]);
            }
            Value::Array(items) => {
                items.remove(last[0].parse::<usize>().unwrap());
            }
            _ => unreachable!(),
        },
        1 => {
            if let Value::Array(items) = parent {
                let copy = items[last[0].parse::<usize>().unwrap()].clone();
                items.push(copy);
            } else if let Value::Object(map) = parent {
                map.insert("unexpected".into(), json!("ignored"));
            }
        }
        _ => *node(value, &path) = REPLACEMENTS.choose(rng).unwrap()(),
    }
}

#[test]
fn fuzzed_payloads_agree_with_an_independent_walker() {
    let mut rng = gen::rng(0x177);
    for schema in ids::ALL {
        let base = valid(schema);
        assert!(oracle_accepts(&base, schema), "{schema} base");
        assert!(validate_payload(&base.to_string(), schema).is_ok(), "{schema} base");
        let (mut accepted, mut rejected) = (0, 0);
        for case in 0..1500 {
            let mut value = base.clone();
            for _ in 0..rng.gen_range(1..=3) {
                mutate(&mut rng, &mut value);
            }
            let want = oracle_accepts(&value, schema);
            let got = validate_payload(&value.to_string(), schema);
            assert_eq!(got.is_ok(), want, "{schema} case {case}: {value} -> {got:?}");
            if want {
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
        assert!(accepted > 50 && rejected > 50, "{schema}: {accepted} accepted, {rejected} rejected");
    }
}

#[test]
fn non_objects_and_broken_json_are_rejected() {
    for schema in ids::ALL {
        for raw in ["", "[]", "null", "\"text\"", "{", "{\"a\":1}}"] {
            assert!(validate_payload(raw, schema).is_err(), "{schema}: {raw}");
        }
    }
}
