//! A deterministic, rule-based stand-in for a model. It reads the context
//! blocks of each envelope and writes a schema-valid reply, so whole runs
//! can be recorded into scripts without network access.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adaptmate::{AdaptationSignal, CompletionStatus};
use crate::corpus::tokenize;
use crate::domain::{resolve_local, serde_fmt, LearnerProfile, LearningPath};

use super::payloads::SessionPayload;
use super::schema::ids;
use super::{PromptEnvelope, Provider, ProviderError, RawCompletion};

/// A concept the author tags quiz questions with, and the transcript cues
/// (`lesson_id#cue_index`) that teach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub tag: String,
    pub label: String,
    pub segments: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureAuthor {
    concepts: Vec<Concept>,
    by_segment: BTreeMap<String, usize>,
}

const DISTRACTORS: &[&str] = &[
    "Farming spread to every continent within a single generation.",
    "Foraging bands kept large grain surpluses in permanent warehouses.",
    "The first cities appeared long before anyone planted crops.",
    "Domesticated animals were kept only as companions, never for food or labor.",
    "Villages grew only in places without reliable water.",
    "The change from foraging to farming was complete within a single year.",
    "Writing was invented by nomads who never traded with farmers.",
];

#[derive(Debug, Clone, Deserialize)]
struct Segment {
    lesson_id: String,
    cue_index: usize,
    timestamp: String,
    text: String,
}

#[derive(Debug, Clone)]
struct Slot {
    date: NaiveDate,
    start: NaiveTime,
    end: NaiveTime,
    timezone: String,
}

impl Slot {
    fn minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }
}

fn block<T: for<'de> Deserialize<'de>>(env: &PromptEnvelope, label: &str) -> Option<T> {
    serde_json::from_str(env.context(label)?).ok()
}

fn segments(env: &PromptEnvelope) -> Vec<Segment> {
    env.contexts_with_prefix("segment:")
        .filter_map(|b| serde_json::from_str(&b.text).ok())
        .collect()
}

fn slots(env: &PromptEnvelope) -> Vec<Slot> {
    let raw: Vec<Value> = block(env, "availability").unwrap_or_default();
    let mut out: Vec<Slot> = raw
        .iter()
        .filter_map(|v| {
            Some(Slot {
                date: NaiveDate::parse_from_str(v["date"].as_str()?, "%Y-%m-%d").ok()?,
                start: serde_fmt::parse_hhmm(v["start_time"].as_str()?)?,
                end: serde_fmt::parse_hhmm(v["end_time"].as_str()?)?,
                timezone: v["timezone"].as_str()?.to_string(),
            })
        })
        .filter(|s| s.end > s.start)
        .collect();
    out.sort_by_key(|s| (s.date, s.start));
    out
}

/// Local start and end of a session as the agents see it.
fn session_span(s: &SessionPayload) -> Option<(NaiveDate, NaiveTime, NaiveTime)> {
    let date = NaiveDate::parse_from_str(s.date.as_deref()?, "%Y-%m-%d").ok()?;
    let start = serde_fmt::parse_hhmm(&s.start_time)?;
    let end = start.overflowing_add_signed(Duration::minutes(i64::from(s.duration_minutes))).0;
    Some((date, start, end))
}

fn humanize(tag: &str) -> String {
    tag.split(['-', '_'])
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn first_sentence(text: &str) -> String {
    let end = text.find(". ").map_or(text.len(), |i| i + 1);
    text[..end].trim().to_string()
}

/// Four options with `correct` placed at `index`.
fn options(correct: &str, index: usize, rotate: usize) -> Vec<String> {
    let mut out: Vec<String> = (0..3)
        .map(|k| DISTRACTORS[(rotate + k) % DISTRACTORS.len()].to_string())
        .collect();
    out.insert(index, correct.to_string());
    out
}

impl FixtureAuthor {
    pub fn new(concepts: Vec<Concept>) -> Self {
        let mut by_segment = BTreeMap::new();
        for (i, c) in concepts.iter().enumerate() {
            for s in &c.segments {
                by_segment.entry(s.clone()).or_insert(i);
            }
        }
        Self { concepts, by_segment }
    }

    /// Reads a concept list in the JSON form of [`Concept`].
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let concepts: Vec<Concept> =
            serde_json::from_str(text).map_err(|e| ProviderError::ScriptParse(format!("concepts: {e}")))?;
        Ok(Self::new(concepts))
    }

    fn concept_of(&self, seg: &Segment) -> String {
        self.by_segment
            .get(&format!("{}#{}", seg.lesson_id, seg.cue_index))
            .map(|&i| self.concepts[i].tag.clone())
            .unwrap_or_else(|| seg.lesson_id.clone())
    }

    fn label_of(&self, tag: &str) -> String {
        self.concepts
            .iter()
            .find(|c| c.tag == tag)
            .map(|c| c.label.clone())
            .unwrap_or_else(|| humanize(tag))
    }

    fn reply(&self, env: &PromptEnvelope) -> Value {
        match env.response_schema_id() {
            ids::PLAN_DRAFT => self.plan_draft(env),
            ids::PLAN_REPAIR => self.plan_repair(env),
            ids::GUIDANCE => self.guidance(env),
            ids::QA_ANSWER => self.answer(env),
            ids::TIER_DETAILS => self.details(env),
            ids::TIER_PRACTICE => self.practice(env),
            ids::TIER_RESOURCES => self.resources(env),
            ids::QUIZ => self.quiz(env),
            ids::QUIZ_ANALYSIS => self.analysis(env),
            ids::ADAPTATION => self.adaptation(env),
            _ => json!({}),
        }
    }

    fn plan_draft(&self, env: &PromptEnvelope) -> Value {
        let profile: Option<LearnerProfile> = block(env, "profile");
        let outline: Value = block(env, "course_outline").unwrap_or(Value::Null);
        let window: Value = block(env, "planning_window").unwrap_or(Value::Null);
        let Some(profile) = profile else {
            return json!({ "sessions": [] });
        };
        let session_minutes = window["session_minutes"].as_u64().unwrap_or(45).max(1);
        let start_date = window["start_date"]
            .as_str()
            .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
            .unwrap_or_default();
        let empty = Vec::new();
        let units = outline["units"].as_array().unwrap_or(&empty);
        let ordered: Vec<&Value> = match &profile.path {
            LearningPath::Sequential => units.iter().collect(),
            LearningPath::Custom { unit_ids } => unit_ids
                .iter()
                .filter_map(|id| units.iter().find(|u| u["unit_id"] == json!(id)))
                .collect(),
        };

        // Lessons of one unit are grouped while they fit a session.
        let mut chunks: Vec<(&Value, Vec<&Value>)> = Vec::new();
        for unit in ordered {
            let mut current: Vec<&Value> = Vec::new();
            let mut minutes = 0;
            for lesson in unit["lessons"].as_array().unwrap_or(&empty) {
                let est = lesson["est_minutes"].as_u64().unwrap_or(30);
                if !current.is_empty() && minutes + est > session_minutes {
                    chunks.push((unit, std::mem::take(&mut current)));
                    minutes = 0;
                }
                current.push(lesson);
                minutes += est;
            }
            if !current.is_empty() {
                chunks.push((unit, current));
            }
        }

        let mut windows = profile.availability.clone();
        windows.sort_by_key(|w| w.start_time);
        let mut slots = Vec::new();
        let mut day = 0i64;
        while slots.len() < chunks.len() && day < 7 * 104 && !windows.is_empty() {
            let date = start_date + Duration::days(day);
            for w in windows.iter().filter(|w| w.weekday == date.weekday()) {
                slots.push((date, w));
            }
            day += 1;
        }

        let mut parts: BTreeMap<String, usize> = BTreeMap::new();
        let totals: BTreeMap<String, usize> = chunks.iter().fold(BTreeMap::new(), |mut m, (u, _)| {
            *m.entry(u["unit_id"].as_str().unwrap_or("").to_string()).or_insert(0) += 1;
            m
        });
        let mut sessions = Vec::new();
        let mut weeks: BTreeMap<i64, Vec<String>> = BTreeMap::new();
        for (i, (unit, lessons)) in chunks.iter().enumerate() {
            let unit_id = unit["unit_id"].as_str().unwrap_or("").to_string();
            let unit_title = unit["title"].as_str().unwrap_or("").to_string();
            let part = parts.entry(unit_id.clone()).or_insert(0);
            *part += 1;
            let title = if totals[&unit_id] > 1 {
                format!("{unit_title} (part {part})")
            } else {
                unit_title.clone()
            };
            let (weekday, start, minutes, date) = match slots.get(i) {
                Some((date, w)) => (w.weekday, w.start_time, w.minutes(), *date),
                None => {
                    let (date, w) = slots.last().copied().unwrap_or((start_date, &profile.availability[0]));
                    (w.weekday, w.start_time, w.minutes(), date)
                }
            };
            let duration = (session_minutes as i64).min(minutes.max(1));
            weeks
                .entry((date - start_date).num_days() / 7)
                .or_default()
                .push(title.clone());
            sessions.push(json!({
                "title": title,
                "weekday": serde_fmt::weekday_name(weekday),
                "start_time": serde_fmt::format_hhmm(start),
                "duration_minutes": duration,
                "unit_id": unit_id,
                "lesson_ids": lessons.iter().map(|l| l["lesson_id"].clone()).collect::<Vec<_>>(),
                "objectives": lessons.iter().map(|l| {
                    format!("Explain the main ideas of \"{}\".", l["title"].as_str().unwrap_or(""))
                }).collect::<Vec<_>>(),
                "tips": [match profile.pace {
                    crate::domain::Pace::Relaxed => "Take short notes and stop when the time is up.",
                    crate::domain::Pace::Standard => "Pause after each segment and summarize it in one sentence.",
                    crate::domain::Pace::Intensive => "Watch at normal speed, then write three questions you could answer now.",
                }],
            }));
        }
        let week_blocks: Vec<Value> = weeks
            .iter()
            .map(|(week, titles)| {
                json!({
                    "label": format!("Week {}", week + 1),
                    "narrative": format!("Focus: {}.", titles.join("; ")),
                })
            })
            .collect();
        json!({ "week_blocks": week_blocks, "sessions": sessions })
    }

    fn plan_repair(&self, env: &PromptEnvelope) -> Value {
        let plan: Vec<SessionPayload> = block(env, "plan").unwrap_or_default();
        let frozen: BTreeSet<String> = block::<Vec<String>>(env, "frozen_sessions")
            .unwrap_or_default()
            .into_iter()
            .collect();
        let max = block::<LearnerProfile>(env, "profile").map_or(60, |p| i64::from(p.max_session_minutes));
        let slots = slots(env);
        let busy: Vec<(NaiveDate, NaiveTime, NaiveTime)> = plan
            .iter()
            .filter(|s| s.session_id.as_ref().is_some_and(|id| frozen.contains(id)))
            .filter_map(session_span)
            .collect();
        let mut used = vec![false; slots.len()];
        let mut cursor: Option<(NaiveDate, NaiveTime)> = None;
        let mut out = Vec::new();
        for s in &plan {
            if s.session_id.as_ref().is_some_and(|id| frozen.contains(id)) {
                out.push(s.clone());
                continue;
            }
            let free = slots.iter().enumerate().find(|(j, slot)| {
                !used[*j]
                    && cursor.is_none_or(|c| (slot.date, slot.start) >= c)
                    && !busy
                        .iter()
                        .any(|(d, bs, be)| *d == slot.date && *bs < slot.end && slot.start < *be)
            });
            let mut repaired = s.clone();
            if let Some((j, slot)) = free {
                used[j] = true;
                let minutes = i64::from(s.duration_minutes).min(slot.minutes()).min(max).max(1);
                repaired.date = Some(slot.date.format("%Y-%m-%d").to_string());
                repaired.weekday = None;
                repaired.start_time = serde_fmt::format_hhmm(slot.start);
                repaired.duration_minutes = minutes as u32;
                cursor = Some((slot.date, slot.start + Duration::minutes(minutes)));
            }
            out.push(repaired);
        }
        json!({ "sessions": out })
    }

    fn guidance(&self, env: &PromptEnvelope) -> Value {
        let session: Value = block(env, "session").unwrap_or(Value::Null);
        let prefs: Value = block(env, "preferences").unwrap_or(Value::Null);
        let titles: Vec<String> = session["lessons"]
            .as_array()
            .map(|ls| ls.iter().filter_map(|l| l["title"].as_str().map(String::from)).collect())
            .unwrap_or_default();
        let goal = prefs["goals"]["text"].as_str().unwrap_or("your goal");
        let minutes = session["duration_minutes"].as_i64().unwrap_or(0);
        json!({
            "guidance": format!(
                "This session covers {}. Keep your goal in view: {}. Plan on about {} minutes and keep the last five for a short recap.",
                titles.join(" and "),
                goal.trim_end_matches('.'),
                minutes
            ),
            "focus_points": titles.iter().map(|t| format!("Key ideas of \"{t}\"")).collect::<Vec<_>>(),
        })
    }

    fn answer(&self, env: &PromptEnvelope) -> Value {
        let segs = segments(env);
        let text = match segs.split_first() {
            Some((first, rest)) => {
                let mut text = format!("At {} the lecture explains: {}", first.timestamp, first.text);
                if let Some(second) = rest.first() {
                    text.push_str(&format!(" It adds at {}: {}", second.timestamp, second.text));
                }
                text
            }
            None => {
                let session: Value = block(env, "session").unwrap_or(Value::Null);
                format!(
                    "In general terms, this depends on sources outside the course. It may help to come back to \"{}\" once you have explored it elsewhere.",
                    session["unit_title"].as_str().unwrap_or("this unit")
                )
            }
        };
        json!({ "answer": text })
    }

    fn details(&self, env: &PromptEnvelope) -> Value {
        let segs = segments(env);
        let text = if segs.is_empty() {
            format!(
                "Going further than the short answer: {}",
                env.context("answer").unwrap_or_default()
            )
        } else {
            let parts: Vec<String> = segs.iter().map(|s| format!("{} ({})", s.text, s.timestamp)).collect();
            format!("Going further: {} Together these explain the question in more depth.", parts.join(" "))
        };
        json!({ "text": text })
    }

    fn practice(&self, env: &PromptEnvelope) -> Value {
        let segs = segments(env);
        let questions: Vec<Value> = if segs.is_empty() {
            let answer = first_sentence(env.context("answer").unwrap_or("No answer."));
            vec![json!({
                "stem": "Which statement best summarizes the answer?",
                "options": options(&answer, 2, 4),
                "correct_index": 2,
                "concept_tag": "summary",
            })]
        } else {
            segs.iter()
                .take(2)
                .enumerate()
                .map(|(k, s)| {
                    let index = (k * 2 + 2) % 4;
                    json!({
                        "stem": format!("Practice: which statement matches the lecture at {}?", s.timestamp),
                        "options": options(&s.text, index, k + 3),
                        "correct_index": index,
                        "concept_tag": self.concept_of(s),
                    })
                })
                .collect()
        };
        json!({ "questions": questions })
    }

    fn resources(&self, env: &PromptEnvelope) -> Value {
        let session: Value = block(env, "session").unwrap_or(Value::Null);
        let title = session["unit_title"].as_str().unwrap_or("World history");
        json!({
            "resources": [{
                "url": format!("https://en.wikipedia.org/wiki/{}", title.replace(' ', "_")),
                "label": format!("Encyclopedia entry: {title}"),
            }]
        })
    }

    fn quiz(&self, env: &PromptEnvelope) -> Value {
        let segs = segments(env);
        let count: usize = env
            .user_text()
            .split(|c: char| !c.is_ascii_digit())
            .find(|t| !t.is_empty())
            .and_then(|t| t.parse().ok())
            .unwrap_or(4);
        let asked: Vec<String> = block(env, "questions_asked").unwrap_or_default();
        let mut picked: Vec<usize> = Vec::new();
        for q in &asked {
            let terms: BTreeSet<String> = tokenize(q).into_iter().collect();
            let best = segs
                .iter()
                .enumerate()
                .filter(|(i, _)| !picked.contains(i))
                .map(|(i, s)| (tokenize(&s.text).iter().filter(|t| terms.contains(*t)).count(), i))
                .filter(|(overlap, _)| *overlap > 0)
                .max_by_key(|(overlap, i)| (*overlap, std::cmp::Reverse(*i)));
            if let Some((_, i)) = best {
                if picked.len() < count {
                    picked.push(i);
                }
            }
        }
        let mut concepts: BTreeSet<String> = picked.iter().map(|&i| self.concept_of(&segs[i])).collect();
        for (i, s) in segs.iter().enumerate() {
            if picked.len() >= count {
                break;
            }
            if !picked.contains(&i) && concepts.insert(self.concept_of(s)) {
                picked.push(i);
            }
        }
        for i in 0..segs.len() {
            if picked.len() >= count {
                break;
            }
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
        let questions: Vec<Value> = (0..count)
            .filter(|_| !segs.is_empty())
            .map(|j| {
                let s = &segs[picked.get(j).copied().unwrap_or(j % segs.len())];
                let index = (j * 3 + 1) % 4;
                json!({
                    "stem": format!("According to the lecture at {}, which statement is accurate?", s.timestamp),
                    "options": options(&s.text, index, j),
                    "correct_index": index,
                    "concept_tag": self.concept_of(s),
                    "source_refs": [{ "lesson_id": s.lesson_id, "cue_index": s.cue_index }],
                })
            })
            .collect();
        json!({ "questions": questions })
    }

    fn analysis(&self, env: &PromptEnvelope) -> Value {
        let result: Value = block(env, "quiz_result").unwrap_or(Value::Null);
        let weak: Vec<String> = block(env, "weak_concepts").unwrap_or_default();
        let score = result["score"].as_str().unwrap_or("");
        let narrative = if weak.is_empty() {
            format!("You scored {score} and answered every question correctly. Keep going with the plan.")
        } else {
            let labels: Vec<String> = weak.iter().map(|t| self.label_of(t)).collect();
            format!(
                "You scored {score}. The questions you missed point to {}. A short review of those parts of the lessons should close the gap.",
                labels.join(" and ")
            )
        };
        json!({ "narrative": narrative, "mentioned_concepts": weak })
    }

    fn adaptation(&self, env: &PromptEnvelope) -> Value {
        let Some(signal) = block::<AdaptationSignal>(env, "signal") else {
            return json!({ "ops": [] });
        };
        let plan: Vec<SessionPayload> = block(env, "plan").unwrap_or_default();
        let now: DateTime<Utc> = block::<Value>(env, "now")
            .and_then(|v| v["utc"].as_str().and_then(|s| s.parse().ok()))
            .unwrap_or_default();
        let mut busy: Vec<(NaiveDate, NaiveTime, NaiveTime)> = plan.iter().filter_map(session_span).collect();
        let mut free = slots(env).into_iter().filter(|slot| {
            let tz = slot.timezone.parse().unwrap_or(chrono_tz::Tz::UTC);
            resolve_local(tz, slot.date, slot.start) > now
        });
        let mut take = |minutes: i64| -> Option<(NaiveDate, NaiveTime, i64)> {
            let slot = free.find(|slot| {
                !busy
                    .iter()
                    .any(|(d, s, e)| *d == slot.date && *s < slot.end && slot.start < *e)
            })?;
            let minutes = minutes.min(slot.minutes());
            busy.push((slot.date, slot.start, slot.start + Duration::minutes(minutes)));
            Some((slot.date, slot.start, minutes))
        };

        let mut ops = Vec::new();
        for w in signal.weak_concepts.iter().take(2) {
            if w.lesson_ids.is_empty() {
                continue;
            }
            let Some((date, start, minutes)) = take(45) else { break };
            let label = self.label_of(&w.concept_tag);
            ops.push(json!({
                "op": "add_session",
                "title": format!("Targeted Review: {label}"),
                "date": date.format("%Y-%m-%d").to_string(),
                "start_time": serde_fmt::format_hhmm(start),
                "duration_minutes": minutes,
                "lesson_ids": w.lesson_ids,
                "objectives": [format!("Revisit {label} and answer the missed questions correctly.")],
                "tips": ["Rewatch the cited segments before retrying the practice questions."],
                "rationale": format!(
                    "The quiz showed gaps in {label}. This review goes back to the lessons behind the missed questions."
                ),
                "evidence": [format!("weak_concept:{}", w.concept_tag)],
            }));
        }
        for (session_id, record) in &signal.completion {
            if record.status != CompletionStatus::Abandoned {
                continue;
            }
            let Some(source) = plan.iter().find(|s| s.session_id.as_deref() == Some(session_id)) else {
                continue;
            };
            let Some((date, start, minutes)) = take(i64::from(source.duration_minutes)) else { break };
            let title = source.title.clone().unwrap_or_else(|| format!("Unit {}", source.unit_id));
            ops.push(json!({
                "op": "add_session",
                "title": format!("Relearn: {title}"),
                "date": date.format("%Y-%m-%d").to_string(),
                "start_time": serde_fmt::format_hhmm(start),
                "duration_minutes": minutes,
                "unit_id": source.unit_id,
                "lesson_ids": source.lesson_ids,
                "rationale": format!("Session {session_id} was stopped early, so its material gets another slot."),
                "evidence": [format!("completion:{session_id}")],
            }));
        }
        json!({ "ops": ops })
    }
}

impl Provider for FixtureAuthor {
    fn name(&self) -> &str {
        "fixture-author"
    }

    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        Ok(RawCompletion {
            text: crate::canonical::value_to_string(&self.reply(envelope)),
            latency_ms: 0,
        })
    }
}
