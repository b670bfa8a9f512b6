//! A WebVTT subset: a `WEBVTT` header, blank-line separated cues, an optional
//! cue identifier line, and `HH:MM:SS.mmm --> HH:MM:SS.mmm` timings.

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

impl Cue {
    pub fn start_s(&self) -> f64 {
        self.start_ms as f64 / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub lesson_id: String,
    pub cues: Vec<Cue>,
}

pub fn parse_transcript(lesson_id: &str, bytes: &[u8]) -> Result<Transcript, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_error(0, format!("not UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();

    let mut transcript = Transcript {
        lesson_id: lesson_id.to_string(),
        cues: Vec::new(),
    };
    let Some(first) = lines.iter().position(|l| !l.trim().is_empty()) else {
        return Ok(transcript);
    };
    let header = lines[first];
    if header != "WEBVTT" && !header.starts_with("WEBVTT ") && !header.starts_with("WEBVTT\t") {
        return Err(parse_error(first + 1, "missing WEBVTT header".into()));
    }

    // Skip the header block.
    let mut i = first + 1;
    while i < lines.len() && !lines[i].trim().is_empty() {
        i += 1;
    }

    while i < lines.len() {
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        if i >= lines.len() {
            break;
        }
        let block_start = i;
        while i < lines.len() && !lines[i].trim().is_empty() {
            i += 1;
        }
        let block = &lines[block_start..i];
        if block[0].starts_with("NOTE") || block[0] == "STYLE" || block[0] == "REGION" {
            continue;
        }
        let timing_at = if block[0].contains("-->") { 0 } else { 1 };
        let Some(timing) = block.get(timing_at).filter(|l| l.contains("-->")) else {
            return Err(parse_error(block_start + 1, "cue without a timing line".into()));
        };
        let line_no = block_start + timing_at + 1;
        let (start_ms, end_ms) = parse_timing(timing).map_err(|m| parse_error(line_no, m))?;
        let text = block[timing_at + 1..]
            .iter()
            .flat_map(|l| l.split_whitespace())
            .collect::<Vec<_>>()
            .join(" ");

        let index = transcript.cues.len();
        if start_ms >= end_ms {
            return Err(CorpusError::NonMonotonicCue {
                index,
                detail: "cue ends before it starts".into(),
            });
        }
        if let Some(prev) = transcript.cues.last() {
            if start_ms < prev.end_ms {
                return Err(CorpusError::NonMonotonicCue {
                    index,
                    detail: format!(
                        "cue starts at {} before previous cue ends at {}",
                        format_vtt_time(start_ms),
                        format_vtt_time(prev.end_ms)
                    ),
                });
            }
        }
        transcript.cues.push(Cue {
            start_ms,
            end_ms,
            text,
        });
    }
    Ok(transcript)
}

fn parse_error(line: usize, message: String) -> CorpusError {
    CorpusError::Parse {
        line,
        column: 0,
        message,
    }
}

fn parse_timing(line: &str) -> Result<(u64, u64), String> {
    let (left, right) = line.split_once("-->").ok_or("missing `-->`")?;
    // Anything after the end timestamp is cue settings.
    let right = right.split_whitespace().next().ok_or("missing end timestamp")?;
    Ok((parse_vtt_time(left.trim())?, parse_vtt_time(right)?))
}

fn parse_vtt_time(text: &str) -> Result<u64, String> {
    let bad = || format!("bad timestamp `{text}`, expected HH:MM:SS.mmm");
    let (clock, millis) = text.split_once('.').ok_or_else(bad)?;
    let parts: Vec<&str> = clock.split(':').collect();
    if parts.len() != 3 || millis.len() != 3 {
        return Err(bad());
    }
    let field = |s: &str| -> Result<u64, String> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        s.parse::<u64>().map_err(|_| bad())
    };
    let (h, m, s, ms) = (field(parts[0])?, field(parts[1])?, field(parts[2])?, field(millis)?);
    if m >= 60 || s >= 60 {
        return Err(bad());
    }
    Ok(((h * 60 + m) * 60 + s) * 1000 + ms)
}

pub fn format_vtt_time(ms: u64) -> String {
    let (h, rest) = (ms / 3_600_000, ms % 3_600_000);
    let (m, rest) = (rest / 60_000, rest % 60_000);
    let (s, millis) = (rest / 1000, rest % 1000);
    format!("{h:02}:{m:02}:{s:02}.{millis:03}")
}

/// Short display form used for citation chips: `4:35`, or `1:02:03` past an hour.
pub fn format_timestamp(ms: u64) -> String {
    let total = ms / 1000;
    let (h, m, s) = (total / 3600, (total % 3600) / 60, total % 60);
    if h > 0 {
        format!("{h}:{m:02}:{s:02}")
    } else {
        format!("{m}:{s:02}")
    }
}

/// Writes the transcript back out in the same subset `parse_transcript` reads.
pub fn to_vtt(transcript: &Transcript) -> String {
    let mut out = String::from("WEBVTT\n");
    for cue in &transcript.cues {
        out.push('\n');
        out.push_str(&format_vtt_time(cue.start_ms));
        out.push_str(" --> ");
        out.push_str(&format_vtt_time(cue.end_ms));
        out.push('\n');
        out.push_str(&cue.text);
        out.push('\n');
    }
    out
}
