use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::{parse_timezone, DomainError, LearnerProfile};

pub const DEFAULT_HORIZON_WEEKS: u32 = 8;

/// A concrete span of availability. `timezone` is the zone of the weekly
/// window it was expanded from (the first one, after merging).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityInterval {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub timezone: String,
}

impl AvailabilityInterval {
    pub fn contains(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> bool {
        self.start <= start && end <= self.end
    }

    pub fn minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }
}

/// Resolves a local wall-clock time to UTC. Ambiguous times (DST fall-back)
/// take the earlier instant; times inside a spring-forward gap move to the
/// first valid local minute after the gap.
pub fn resolve_local(tz: Tz, date: NaiveDate, time: NaiveTime) -> DateTime<Utc> {
    let mut naive = date.and_time(time);
    for _ in 0..=24 * 60 {
        if let Some(resolved) = tz.from_local_datetime(&naive).earliest() {
            return resolved.with_timezone(&Utc);
        }
        naive += Duration::minutes(1);
    }
    unreachable!("no timezone has a gap longer than a day")
}

/// Expands the weekly windows over the default eight-week horizon starting at
/// `week_start`.
pub fn normalize_availability(
    profile: &LearnerProfile,
    week_start: NaiveDate,
) -> Result<Vec<AvailabilityInterval>, DomainError> {
    normalize_availability_days(profile, week_start, DEFAULT_HORIZON_WEEKS * 7)
}

/// Expands the weekly windows for `days` local calendar days from `start`,
/// then sorts and merges overlapping or touching intervals.
pub fn normalize_availability_days(
    profile: &LearnerProfile,
    start: NaiveDate,
    days: u32,
) -> Result<Vec<AvailabilityInterval>, DomainError> {
    let zones = profile
        .availability
        .iter()
        .map(|w| parse_timezone(&w.timezone))
        .collect::<Result<Vec<_>, _>>()?;

    let mut raw = Vec::new();
    for offset in 0..days {
        let date = start + Duration::days(i64::from(offset));
        for (window, tz) in profile.availability.iter().zip(&zones) {
            if window.start_time >= window.end_time || date.weekday() != window.weekday {
                continue;
            }
            raw.push(AvailabilityInterval {
                start: resolve_local(*tz, date, window.start_time),
                end: resolve_local(*tz, date, window.end_time),
                timezone: window.timezone.clone(),
            });
        }
    }
    Ok(merge_intervals(raw))
}

pub fn merge_intervals(mut intervals: Vec<AvailabilityInterval>) -> Vec<AvailabilityInterval> {
    intervals.retain(|i| i.start < i.end);
    intervals.sort_by(|a, b| (a.start, a.end, &a.timezone).cmp(&(b.start, b.end, &b.timezone)));
    let mut merged: Vec<AvailabilityInterval> = Vec::with_capacity(intervals.len());
    for interval in intervals {
        match merged.last_mut() {
            Some(last) if interval.start <= last.end => {
                if interval.end > last.end {
                    last.end = interval.end;
                }
            }
            _ => merged.push(interval),
        }
    }
    merged
}
