//! Response schemas for every agent, and the walker that checks raw model
//! output against them.
//!
//! The schema language is deliberately small: typed fields, required flags,
//! enum ranges, string formats and array count bounds. Cross-field rules live
//! in per-schema refinement functions.

use serde_json::Value;

use crate::domain::serde_fmt;

pub mod ids {
    pub const PLAN_DRAFT: &str = "plan_draft.v1";
    pub const PLAN_REPAIR: &str = "plan_repair.v1";
    pub const GUIDANCE: &str = "guidance.v1";
    pub const QA_ANSWER: &str = "qa_answer.v1";
    pub const TIER_DETAILS: &str = "tier_details.v1";
    pub const TIER_PRACTICE: &str = "tier_practice.v1";
    pub const TIER_RESOURCES: &str = "tier_resources.v1";
    pub const QUIZ: &str = "quiz.v1";
    pub const QUIZ_ANALYSIS: &str = "quiz_analysis.v1";
    pub const ADAPTATION: &str = "adaptation.v1";

    pub const ALL: &[&str] = &[
        PLAN_DRAFT,
        PLAN_REPAIR,
        GUIDANCE,
        QA_ANSWER,
        TIER_DETAILS,
        TIER_PRACTICE,
        TIER_RESOURCES,
        QUIZ,
        QUIZ_ANALYSIS,
        ADAPTATION,
    ];
}

/// Number of answer options on every multiple-choice question.
pub const OPTIONS_PER_QUESTION: usize = 4;

pub const ADAPTATION_OPS: &[&str] = &[
    "add_session",
    "remove_session",
    "move_session",
    "resize_session",
    "replace_content",
];

const WEEKDAYS: &[&str] = &["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

#[derive(Debug, Clone, Copy)]
enum Format {
    Any,
    Date,
    Time,
}

#[derive(Debug, Clone)]
enum Shape {
    Str { non_empty: bool, format: Format },
    Int { min: i64, max: i64 },
    Enum(&'static [&'static str]),
    Array { item: Box<Shape>, min: usize, max: Option<usize> },
    Object(Vec<Field>),
}

#[derive(Debug, Clone)]
struct Field {
    name: &'static str,
    shape: Shape,
    required: bool,
}

fn req(name: &'static str, shape: Shape) -> Field {
    Field {
        name,
        shape,
        required: true,
    }
}

fn opt(name: &'static str, shape: Shape) -> Field {
    Field {
        name,
        shape,
        required: false,
    }
}

fn text() -> Shape {
    Shape::Str {
        non_empty: true,
        format: Format::Any,
    }
}

fn any_text() -> Shape {
    Shape::Str {
        non_empty: false,
        format: Format::Any,
    }
}

fn date() -> Shape {
    Shape::Str {
        non_empty: true,
        format: Format::Date,
    }
}

fn time() -> Shape {
    Shape::Str {
        non_empty: true,
        format: Format::Time,
    }
}

fn int(min: i64, max: i64) -> Shape {
    Shape::Int { min, max }
}

fn list(item: Shape, min: usize) -> Shape {
    Shape::Array {
        item: Box::new(item),
        min,
        max: None,
    }
}

fn exactly(item: Shape, n: usize) -> Shape {
    Shape::Array {
        item: Box::new(item),
        min: n,
        max: Some(n),
    }
}

fn mcq_fields() -> Vec<Field> {
    vec![
        req("stem", text()),
        req("options", exactly(text(), OPTIONS_PER_QUESTION)),
        req("correct_index", int(0, OPTIONS_PER_QUESTION as i64 - 1)),
        req("concept_tag", text()),
    ]
}

fn session_fields(date_required: bool) -> Vec<Field> {
    vec![
        opt("session_id", text()),
        opt("title", text()),
        opt("weekday", Shape::Enum(WEEKDAYS)),
        Field {
            name: "date",
            shape: date(),
            required: date_required,
        },
        req("start_time", time()),
        req("duration_minutes", int(1, 24 * 60)),
        req("unit_id", text()),
        req("lesson_ids", list(text(), 1)),
        opt("objectives", list(any_text(), 0)),
        opt("tips", list(any_text(), 0)),
    ]
}

struct SchemaDef {
    shape: Shape,
    refine: Option<fn(&Value, &mut Vec<String>)>,
}

fn lookup(schema_id: &str) -> Option<SchemaDef> {
    let plain = |shape| Some(SchemaDef { shape, refine: None });
    match schema_id {
        ids::PLAN_DRAFT => Some(SchemaDef {
            shape: Shape::Object(vec![
                opt(
                    "week_blocks",
                    list(Shape::Object(vec![req("label", text()), opt("narrative", any_text())]), 0),
                ),
                req("sessions", list(Shape::Object(session_fields(false)), 0)),
            ]),
            refine: Some(refine_draft),
        }),
        ids::PLAN_REPAIR => plain(Shape::Object(vec![req(
            "sessions",
            list(Shape::Object(session_fields(true)), 0),
        )])),
        ids::GUIDANCE => plain(Shape::Object(vec![
            req("guidance", text()),
            opt("focus_points", list(text(), 0)),
        ])),
        ids::QA_ANSWER => plain(Shape::Object(vec![req("answer", text())])),
        ids::TIER_DETAILS => plain(Shape::Object(vec![req("text", text())])),
        ids::TIER_PRACTICE => plain(Shape::Object(vec![req(
            "questions",
            list(Shape::Object(mcq_fields()), 1),
        )])),
        ids::TIER_RESOURCES => plain(Shape::Object(vec![req(
            "resources",
            list(Shape::Object(vec![req("url", text()), req("label", text())]), 0),
        )])),
        ids::QUIZ => {
            let mut fields = mcq_fields();
            fields.push(req(
                "source_refs",
                list(
                    Shape::Object(vec![req("lesson_id", text()), req("cue_index", int(0, i64::MAX))]),
                    1,
                ),
            ));
            plain(Shape::Object(vec![req("questions", list(Shape::Object(fields), 1))]))
        }
        ids::QUIZ_ANALYSIS => plain(Shape::Object(vec![
            req("narrative", text()),
            req("mentioned_concepts", list(text(), 0)),
        ])),
        ids::ADAPTATION => Some(SchemaDef {
            shape: Shape::Object(vec![req(
                "ops",
                list(
                    Shape::Object(vec![
                        req("op", Shape::Enum(ADAPTATION_OPS)),
                        opt("session_id", text()),
                        opt("title", text()),
                        opt("date", date()),
                        opt("start_time", time()),
                        opt("duration_minutes", int(1, 24 * 60)),
                        opt("unit_id", text()),
                        opt("lesson_ids", list(text(), 1)),
                        opt("objectives", list(any_text(), 0)),
                        opt("tips", list(any_text(), 0)),
                        req("rationale", text()),
                        req("evidence", list(text(), 1)),
                    ]),
                    0,
                ),
            )]),
            refine: Some(refine_adaptation),
        }),
        _ => None,
    }
}

fn present(obj: &Value, key: &str) -> bool {
    obj.get(key).is_some_and(|v| !v.is_null())
}

fn refine_draft(value: &Value, out: &mut Vec<String>) {
    let Some(sessions) = value.get("sessions").and_then(Value::as_array) else {
        return;
    };
    for (i, s) in sessions.iter().enumerate() {
        match (present(s, "weekday"), present(s, "date")) {
            (true, true) => out.push(format!("$.sessions[{i}]: give either weekday or date, not both")),
            (false, false) => out.push(format!("$.sessions[{i}]: one of weekday or date is required")),
            _ => {}
        }
    }
}

fn refine_adaptation(value: &Value, out: &mut Vec<String>) {
    let Some(ops) = value.get("ops").and_then(Value::as_array) else {
        return;
    };
    for (i, op) in ops.iter().enumerate() {
        let needed: &[&str] = match op.get("op").and_then(Value::as_str) {
            Some("add_session") => &["date", "start_time", "duration_minutes", "lesson_ids"],
            Some("remove_session") => &["session_id"],
            Some("move_session") => &["session_id", "date", "start_time"],
            Some("resize_session") => &["session_id", "duration_minutes"],
            Some("replace_content") => &["session_id", "lesson_ids"],
            _ => &[],
        };
        for key in needed {
            if !present(op, key) {
                out.push(format!("$.ops[{i}].{key}: required for this op"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayloadError {
    UnknownSchema(String),
    Invalid(Vec<String>),
}

pub fn is_registered(schema_id: &str) -> bool {
    lookup(schema_id).is_some()
}

/// Strips surrounding whitespace and an optional Markdown code fence.
pub fn extract_json(raw: &str) -> &str {
    let trimmed = raw.trim();
    if let Some(rest) = trimmed.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        if let Some(body) = rest.trim_end().strip_suffix("```") {
            return body.trim();
        }
    }
    trimmed
}

/// Parses `raw_text` and checks it against the registered schema. Returns the
/// parsed payload, or every violation found (each naming its JSON path).
pub fn validate_payload(raw_text: &str, schema_id: &str) -> Result<Value, PayloadError> {
    let def = lookup(schema_id).ok_or_else(|| PayloadError::UnknownSchema(schema_id.to_string()))?;
    let value: Value = serde_json::from_str(extract_json(raw_text))
        .map_err(|e| PayloadError::Invalid(vec![format!("$: not valid JSON ({e})")]))?;
    let mut violations = Vec::new();
    walk(&value, &def.shape, "$", &mut violations);
    if violations.is_empty() {
        if let Some(refine) = def.refine {
            refine(&value, &mut violations);
        }
    }
    if violations.is_empty() {
        Ok(value)
    } else {
        Err(PayloadError::Invalid(violations))
    }
}

fn walk(value: &Value, shape: &Shape, path: &str, out: &mut Vec<String>) {
    match shape {
        Shape::Str { non_empty, format } => {
            let Some(s) = value.as_str() else {
                out.push(format!("{path}: expected a string"));
                return;
            };
            if *non_empty && s.trim().is_empty() {
                out.push(format!("{path}: must not be empty"));
                return;
            }
            match format {
                Format::Any => {}
                Format::Date => {
                    if chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_err() {
                        out.push(format!("{path}: expected a YYYY-MM-DD date, got `{s}`"));
                    }
                }
                Format::Time => {
                    if serde_fmt::parse_hhmm(s).is_none() {
                        out.push(format!("{path}: expected an HH:MM time, got `{s}`"));
                    }
                }
            }
        }
        Shape::Int { min, max } => match value.as_i64() {
            Some(n) if n < *min || n > *max => {
                out.push(format!("{path}: {n} is outside {min}..={max}"));
            }
            Some(_) => {}
            None => out.push(format!("{path}: expected an integer")),
        },
        Shape::Enum(allowed) => match value.as_str() {
            Some(s) if allowed.contains(&s) => {}
            _ => out.push(format!("{path}: expected one of {}", allowed.join(", "))),
        },
        Shape::Array { item, min, max } => {
            let Some(items) = value.as_array() else {
                out.push(format!("{path}: expected an array"));
                return;
            };
            match max {
                Some(max) if min == max && items.len() != *min => {
                    out.push(format!("{path}: expected exactly {min} items, found {}", items.len()));
                }
                Some(max) if items.len() > *max => {
                    out.push(format!("{path}: expected at most {max} items, found {}", items.len()));
                }
                _ if items.len() < *min => {
                    out.push(format!("{path}: expected at least {min} items, found {}", items.len()));
                }
                _ => {}
            }
            for (i, item_value) in items.iter().enumerate() {
                walk(item_value, item, &format!("{path}[{i}]"), out);
            }
        }
        Shape::Object(fields) => {
            let Some(obj) = value.as_object() else {
                out.push(format!("{path}: expected an object"));
                return;
            };
            for field in fields {
                match obj.get(field.name) {
                    None | Some(Value::Null) if field.required => {
                        out.push(format!("{path}.{}: required", field.name));
                    }
                    None | Some(Value::Null) => {}
                    Some(v) => walk(v, &field.shape, &format!("{path}.{}", field.name), out),
                }
            }
        }
    }
}
