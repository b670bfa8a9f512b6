use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::stopwords::is_stopword;
use super::{CorpusError, Transcript};

/// Default out-of-scope threshold on the normalized retrieval score.
pub const DEFAULT_SCOPE_THRESHOLD: f64 = 0.15;

/// A pointer to one transcript cue, with its retrieval score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub lesson_id: String,
    pub cue_index: usize,
    pub start_s: f64,
    pub score: f64,
}

/// Case-folded alphanumeric tokens with stopwords removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !is_stopword(t))
        .collect()
}

fn counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut map = HashMap::new();
    for t in tokens {
        *map.entry(t.as_str()).or_insert(0) += 1;
    }
    map
}

/// Ranks cues by term-frequency overlap with the query:
/// `sum over terms of min(tf_query, tf_cue) / query_token_count`.
///
/// Ordering is score descending, then earlier `start_s`, then `lesson_id`.
/// Cues with zero overlap are never returned.
pub fn retrieve_segments<'a>(
    query: &str,
    transcripts: impl IntoIterator<Item = &'a Transcript>,
    k: usize,
) -> Result<Vec<SegmentRef>, CorpusError> {
    if k == 0 {
        return Err(CorpusError::InvalidArgument("k must be at least 1".into()));
    }
    let query_tokens = tokenize(query);
    if query_tokens.is_empty() {
        return Err(CorpusError::EmptyQuery);
    }
    let query_counts = counts(&query_tokens);

    let mut hits: Vec<(usize, u64, &str, usize)> = Vec::new();
    for transcript in transcripts {
        for (index, cue) in transcript.cues.iter().enumerate() {
            let cue_tokens = tokenize(&cue.text);
            let cue_counts = counts(&cue_tokens);
            let overlap: usize = query_counts
                .iter()
                .map(|(term, q)| (*q).min(cue_counts.get(term).copied().unwrap_or(0)))
                .sum();
            if overlap > 0 {
                hits.push((overlap, cue.start_ms, transcript.lesson_id.as_str(), index));
            }
        }
    }
    hits.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(b.2))
            .then(a.3.cmp(&b.3))
    });
    let total = query_tokens.len() as f64;
    Ok(hits
        .into_iter()
        .take(k)
        .map(|(overlap, start_ms, lesson_id, cue_index)| SegmentRef {
            lesson_id: lesson_id.to_string(),
            cue_index,
            start_s: start_ms as f64 / 1000.0,
            score: overlap as f64 / total,
        })
        .collect())
}
