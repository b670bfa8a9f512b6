//! Independent brute-force checks, written without the engine's helpers.

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Datelike, Duration, Utc};
use chrono_tz::Tz;

use learnmate_core::corpus::CourseManifest;
use learnmate_core::domain::{LearnerProfile, LearningPath, StudyPlan};

/// Is the minute starting at `t` inside some weekly window, judged by the
/// local wall clock of that window's zone?
pub fn minute_covered(profile: &LearnerProfile, t: DateTime<Utc>) -> bool {
    profile.availability.iter().any(|w| {
        let Ok(tz) = w.timezone.parse::<Tz>() else {
            return false;
        };
        let local = t.with_timezone(&tz);
        local.weekday() == w.weekday && w.start_time <= local.time() && local.time() < w.end_time
    })
}

/// Course position of every lesson: units by `order`, lessons as listed.
pub fn positions(manifest: &CourseManifest) -> BTreeMap<String, usize> {
    let mut units: Vec<_> = manifest.units.iter().collect();
    units.sort_by_key(|u| u.order);
    units
        .iter()
        .flat_map(|u| u.lessons.iter())
        .enumerate()
        .map(|(i, l)| (l.lesson_id.clone(), i))
        .collect()
}

/// Every feasibility problem of `plan`: overlap, window containment,
/// duration cap, sequential order and lesson membership.
pub fn feasibility(plan: &StudyPlan, profile: &LearnerProfile, manifest: &CourseManifest) -> Vec<String> {
    let mut problems = Vec::new();
    let s = &plan.sessions;
    for i in 0..s.len() {
        for j in 0..s.len() {
            if i < j && s[i].start < s[j].end && s[j].start < s[i].end {
                problems.push(format!("overlap {} {}", s[i].session_id, s[j].session_id));
            }
        }
    }
    for session in s {
        let minutes = (session.end - session.start).num_minutes();
        if minutes <= 0 {
            problems.push(format!("empty {}", session.session_id));
            continue;
        }
        if minutes > i64::from(profile.max_session_minutes) {
            problems.push(format!("too long {}", session.session_id));
        }
        if !(0..minutes).all(|m| minute_covered(profile, session.start + Duration::minutes(m))) {
            problems.push(format!("outside windows {}", session.session_id));
        }
        let unit = manifest.units.iter().find(|u| u.unit_id == session.unit_id);
        let members: HashSet<&str> = unit
            .map(|u| u.lessons.iter().map(|l| l.lesson_id.as_str()).collect())
            .unwrap_or_default();
        if session.lesson_ids.is_empty() || session.lesson_ids.iter().any(|l| !members.contains(l.as_str())) {
            problems.push(format!("content {}", session.session_id));
        }
    }
    if matches!(profile.path, LearningPath::Sequential) {
        let pos = positions(manifest);
        let mut by_start: Vec<_> = s.iter().collect();
        by_start.sort_by_key(|x| (x.start, x.end));
        let mut seen = HashSet::new();
        let firsts: Vec<usize> = by_start
            .iter()
            .flat_map(|x| x.lesson_ids.iter())
            .filter(|l| seen.insert(l.as_str()))
            .filter_map(|l| pos.get(l.as_str()).copied())
            .collect();
        if firsts.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("order {firsts:?}"));
        }
    }
    problems
}
