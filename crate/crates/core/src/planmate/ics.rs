use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Duration, NaiveDateTime, Offset, TimeZone, Utc};
use chrono_tz::{OffsetComponents, OffsetName, Tz};
use thiserror::Error;

use super::CalendarEvent;

pub const PRODID: &str = "-//LearnMate//Study Plan//EN";
const MAX_OCTETS: usize = 75;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IcsError {
    #[error("duplicate event uid `{0}`")]
    DuplicateUid(String),
}

/// Escapes a TEXT value: backslash, semicolon, comma and newlines.
pub fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push_str("\\\\"),
            ';' => out.push_str("\\;"),
            ',' => out.push_str("\\,"),
            '\r' if chars.peek() == Some(&'\n') => {}
            '\n' | '\r' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

/// Folds one content line to at most 75 octets per physical line, never
/// splitting a UTF-8 sequence. Continuations start with a single space.
/// Physical lines never end in whitespace, since some readers trim it.
pub fn fold_line(line: &str, out: &mut String) {
    let mut rest = line;
    let mut limit = MAX_OCTETS;
    loop {
        if rest.len() <= limit {
            out.push_str(rest);
            out.push_str("\r\n");
            return;
        }
        let mut cut = limit;
        while !rest.is_char_boundary(cut) {
            cut -= 1;
        }
        let trimmed = rest[..cut].trim_end_matches([' ', '\t']).len();
        if trimmed > 0 {
            cut = trimmed;
        }
        out.push_str(&rest[..cut]);
        out.push_str("\r\n ");
        rest = &rest[cut..];
        limit = MAX_OCTETS - 1;
    }
}

fn utc_stamp(t: DateTime<Utc>) -> String {
    t.format("%Y%m%dT%H%M%SZ").to_string()
}

fn local_stamp(t: NaiveDateTime) -> String {
    t.format("%Y%m%dT%H%M%S").to_string()
}

fn format_offset(seconds: i32) -> String {
    let sign = if seconds < 0 { '-' } else { '+' };
    let s = seconds.abs();
    let (h, m, sec) = (s / 3600, (s % 3600) / 60, s % 60);
    if sec == 0 {
        format!("{sign}{h:02}{m:02}")
    } else {
        format!("{sign}{h:02}{m:02}{sec:02}")
    }
}

fn param_value(value: &str) -> String {
    if value.contains([':', ';', ',']) {
        format!("\"{value}\"")
    } else {
        value.to_string()
    }
}

fn offset_at(tz: Tz, t: DateTime<Utc>) -> i32 {
    tz.offset_from_utc_datetime(&t.naive_utc()).fix().local_minus_utc()
}

/// A VTIMEZONE describing `tz` over `[from, to]`: the offset in force at
/// `from`, then every transition up to `to`.
fn vtimezone(tz: Tz, from: DateTime<Utc>, to: DateTime<Utc>, lines: &mut Vec<String>) {
    let component = |lines: &mut Vec<String>, at: DateTime<Utc>, from_off: i32| {
        let offset = tz.offset_from_utc_datetime(&at.naive_utc());
        let to_off = offset.fix().local_minus_utc();
        let kind = if offset.dst_offset().is_zero() { "STANDARD" } else { "DAYLIGHT" };
        lines.push(format!("BEGIN:{kind}"));
        lines.push(format!(
            "DTSTART:{}",
            local_stamp(at.naive_utc() + Duration::seconds(i64::from(from_off)))
        ));
        lines.push(format!("TZOFFSETFROM:{}", format_offset(from_off)));
        lines.push(format!("TZOFFSETTO:{}", format_offset(to_off)));
        if let Some(name) = offset.abbreviation() {
            lines.push(format!("TZNAME:{}", escape_text(name)));
        }
        lines.push(format!("END:{kind}"));
    };

    lines.push("BEGIN:VTIMEZONE".into());
    lines.push(format!("TZID:{}", tz.name()));
    let initial = offset_at(tz, from);
    component(lines, from, initial);
    let mut prev_time = from;
    let mut prev_off = initial;
    let mut t = from;
    while t < to {
        t = (t + Duration::hours(1)).min(to);
        let off = offset_at(tz, t);
        if off != prev_off {
            let (mut lo, mut hi) = (prev_time, t);
            while hi - lo > Duration::seconds(1) {
                let mid = lo + (hi - lo) / 2;
                if offset_at(tz, mid) == prev_off {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            component(lines, hi, prev_off);
            prev_off = off;
        }
        prev_time = t;
    }
    lines.push("END:VTIMEZONE".into());
}

/// Serializes events as an RFC 5545 calendar. Output depends only on the
/// input, so identical events give identical bytes.
pub fn emit_ics(events: &[CalendarEvent], calendar_name: &str) -> Result<Vec<u8>, IcsError> {
    let mut uids = HashSet::new();
    for e in events {
        if !uids.insert(e.uid.as_str()) {
            return Err(IcsError::DuplicateUid(e.uid.clone()));
        }
    }

    let mut lines: Vec<String> = vec![
        "BEGIN:VCALENDAR".into(),
        "VERSION:2.0".into(),
        format!("PRODID:{PRODID}"),
        "CALSCALE:GREGORIAN".into(),
        "METHOD:PUBLISH".into(),
        format!("X-WR-CALNAME:{}", escape_text(calendar_name)),
    ];

    let mut spans: BTreeMap<String, (Tz, DateTime<Utc>, DateTime<Utc>)> = BTreeMap::new();
    for e in events {
        let Ok(tz) = e.timezone.parse::<Tz>() else { continue };
        if tz == Tz::UTC {
            continue;
        }
        let span = spans.entry(tz.name().to_string()).or_insert((tz, e.dtstart, e.dtend));
        span.1 = span.1.min(e.dtstart);
        span.2 = span.2.max(e.dtend);
    }
    for (tz, from, to) in spans.values() {
        let day_start = |t: DateTime<Utc>| t.date_naive().and_time(chrono::NaiveTime::MIN).and_utc();
        vtimezone(*tz, day_start(*from - Duration::days(1)), day_start(*to + Duration::days(2)), &mut lines);
    }

    for e in events {
        let when = |t: DateTime<Utc>, name: &str| match e.timezone.parse::<Tz>() {
            Ok(tz) if tz != Tz::UTC => format!(
                "{name};TZID={}:{}",
                param_value(tz.name()),
                local_stamp(t.with_timezone(&tz).naive_local())
            ),
            _ => format!("{name}:{}", utc_stamp(t)),
        };
        lines.push("BEGIN:VEVENT".into());
        lines.push(format!("UID:{}", escape_text(&e.uid)));
        lines.push(format!("DTSTAMP:{}", utc_stamp(e.dtstamp)));
        lines.push(when(e.dtstart, "DTSTART"));
        lines.push(when(e.dtend, "DTEND"));
        lines.push(format!("SUMMARY:{}", escape_text(&e.summary)));
        if !e.description.is_empty() {
            lines.push(format!("DESCRIPTION:{}", escape_text(&e.description)));
        }
        if !e.categories.is_empty() {
            let cats: Vec<String> = e.categories.iter().map(|c| escape_text(c)).collect();
            lines.push(format!("CATEGORIES:{}", cats.join(",")));
        }
        lines.push("END:VEVENT".into());
    }
    lines.push("END:VCALENDAR".into());

    let mut out = String::new();
    for line in &lines {
        fold_line(line, &mut out);
    }
    Ok(out.into_bytes())
}
