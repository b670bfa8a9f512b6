//! Seeded generators for randomized tests.

use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{Duration, NaiveDate, NaiveTime, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use learnmate_core::corpus::{CourseManifest, Lesson, Unit};
use learnmate_core::domain::{Goals, LearnerProfile, LearningPath, Pace, WeeklyWindow};
use learnmate_core::provider::schema::ids;
use learnmate_core::provider::{FixtureAuthor, PromptEnvelope, Provider, ProviderError, RawCompletion};

pub const ZONES: &[&str] = &[
    "America/New_York",
    "America/Los_Angeles",
    "Europe/Berlin",
    "Asia/Tokyo",
    "Australia/Sydney",
    "UTC",
];

pub const WEEKDAYS: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).unwrap()
}

pub fn manifest(rng: &mut ChaCha8Rng) -> CourseManifest {
    let units = (1..=rng.gen_range(1..=4))
        .map(|u| Unit {
            unit_id: format!("u{u}"),
            title: format!("Unit {u}"),
            order: u,
            lessons: (1..=rng.gen_range(1..=3))
                .map(|l| Lesson {
                    lesson_id: format!("l{u}-{l}"),
                    title: format!("Lesson {u}.{l}"),
                    video_url: None,
                    transcript_ref: format!("l{u}-{l}.vtt"),
                    est_minutes: rng.gen_range(10..=50),
                    prerequisites: Vec::new(),
                    curated_resources: Vec::new(),
                })
                .collect(),
        })
        .collect();
    CourseManifest {
        course_id: "random-course".into(),
        title: "Random Course".into(),
        units,
    }
}

/// Evening-ish windows away from the small hours, so no window touches a
/// daylight-saving transition.
pub fn window(rng: &mut ChaCha8Rng) -> WeeklyWindow {
    let start = hm(rng.gen_range(6..=21), *[0, 30].choose(rng).unwrap());
    let end = start + Duration::minutes(rng.gen_range(2..=8) * 15);
    WeeklyWindow {
        weekday: *WEEKDAYS.choose(rng).unwrap(),
        start_time: start,
        end_time: end,
        timezone: ZONES.choose(rng).unwrap().to_string(),
    }
}

pub fn profile(rng: &mut ChaCha8Rng, manifest: &CourseManifest) -> LearnerProfile {
    let zone = ZONES.choose(rng).unwrap().to_string();
    let availability = (0..rng.gen_range(1..=4))
        .map(|_| WeeklyWindow {
            timezone: zone.clone(),
            ..window(rng)
        })
        .collect();
    let path = if rng.gen_bool(0.7) {
        LearningPath::Sequential
    } else {
        let mut ids: Vec<String> = manifest.units.iter().map(|u| u.unit_id.clone()).collect();
        ids.shuffle(rng);
        LearningPath::Custom { unit_ids: ids }
    };
    LearnerProfile {
        learner_id: "learner".into(),
        goals: Goals {
            text: "Finish the course".into(),
            target_date: None,
        },
        availability,
        pace: *[Pace::Relaxed, Pace::Standard, Pace::Intensive].choose(rng).unwrap(),
        max_session_minutes: rng.gen_range(20..=90),
        path,
    }
}

/// A planner reply that is well-formed but often infeasible: wrong days,
/// times outside windows, overlong sessions, shuffled content.
pub fn draft(rng: &mut ChaCha8Rng, profile: &LearnerProfile, manifest: &CourseManifest) -> Value {
    let mut chunks: Vec<(String, Vec<String>)> = Vec::new();
    for unit in &manifest.units {
        let mut lessons: Vec<String> = unit.lessons.iter().map(|l| l.lesson_id.clone()).collect();
        while !lessons.is_empty() {
            let take = rng.gen_range(1..=lessons.len().min(2));
            chunks.push((unit.unit_id.clone(), lessons.drain(..take).collect()));
        }
    }
    if rng.gen_bool(0.3) {
        chunks.shuffle(rng);
    }
    let sessions: Vec<Value> = chunks
        .into_iter()
        .map(|(unit_id, lesson_ids)| {
            let window = profile.availability.choose(rng).unwrap();
            let weekday = if rng.gen_bool(0.7) {
                window.weekday
            } else {
                *WEEKDAYS.choose(rng).unwrap()
            };
            let start = if rng.gen_bool(0.6) {
                window.start_time
            } else {
                hm(rng.gen_range(5..=22), *[0, 15, 30, 45].choose(rng).unwrap())
            };
            json!({
                "title": format!("Study {unit_id}"),
                "weekday": learnmate_core::domain::serde_fmt::weekday_name(weekday),
                "start_time": start.format("%H:%M").to_string(),
                "duration_minutes": rng.gen_range(15..=120),
                "unit_id": unit_id,
                "lesson_ids": lesson_ids,
            })
        })
        .collect();
    json!({ "sessions": sessions })
}

pub fn start_date(rng: &mut ChaCha8Rng) -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 9, 1).unwrap() + Duration::days(rng.gen_range(0..120))
}

/// Answers the planner with a fixed reply and every other agent with the
/// fixture author.
pub struct Drafting {
    pub planner: String,
    pub adaptation: Option<String>,
    pub author: FixtureAuthor,
    pub repairs: AtomicUsize,
}

impl Drafting {
    pub fn new(planner: String) -> Self {
        Self {
            planner,
            adaptation: None,
            author: FixtureAuthor::default(),
            repairs: AtomicUsize::new(0),
        }
    }
}

impl Provider for Drafting {
    fn name(&self) -> &str {
        "drafting"
    }

    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        if envelope.response_schema_id() == ids::PLAN_REPAIR {
            self.repairs.fetch_add(1, Ordering::Relaxed);
        }
        let fixed = match envelope.response_schema_id() {
            ids::PLAN_DRAFT => Some(&self.planner),
            ids::ADAPTATION => self.adaptation.as_ref(),
            _ => None,
        };
        match fixed {
            Some(text) => Ok(RawCompletion {
                text: text.clone(),
                latency_ms: 0,
            }),
            None => self.author.send(envelope),
        }
    }
}
