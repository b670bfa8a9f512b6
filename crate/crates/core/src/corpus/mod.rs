//! Course manifests, timestamped transcripts, and lexical retrieval over them.
//!
//! A [`Corpus`] is immutable once loaded and can be shared across threads.

mod manifest;
mod retrieval;
mod stopwords;
mod transcript;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{check_manifest, parse_manifest, CourseManifest, Lesson, ProvenanceLabel, Resource, Unit};
pub use retrieval::{retrieve_segments, tokenize, SegmentRef, DEFAULT_SCOPE_THRESHOLD};
pub use transcript::{format_timestamp, format_vtt_time, parse_transcript, to_vtt, Cue, Transcript};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("prerequisite cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("cue {index} is out of order: {detail}")]
    NonMonotonicCue { index: usize, detail: String },
    #[error("query has no content words")]
    EmptyQuery,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("no transcript for lesson `{0}`")]
    MissingTranscript(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// A course manifest together with the transcript of every lesson.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    manifest: CourseManifest,
    transcripts: BTreeMap<String, Transcript>,
}

impl Corpus {
    pub fn new(
        manifest: CourseManifest,
        transcripts: impl IntoIterator<Item = Transcript>,
    ) -> Result<Self, CorpusError> {
        check_manifest(&manifest)?;
        let transcripts: BTreeMap<_, _> = transcripts
            .into_iter()
            .map(|t| (t.lesson_id.clone(), t))
            .collect();
        if let Some((_, lesson)) = manifest
            .lessons()
            .find(|(_, l)| !transcripts.contains_key(&l.lesson_id))
        {
            return Err(CorpusError::MissingTranscript(lesson.lesson_id.clone()));
        }
        Ok(Self {
            manifest,
            transcripts,
        })
    }

    /// Loads a manifest file and resolves every `transcript_ref` relative to
    /// the manifest's directory.
    pub fn load(manifest_path: &Path) -> Result<Self, CorpusError> {
        let bytes = read(manifest_path)?;
        let manifest = parse_manifest(&bytes)?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut transcripts = Vec::new();
        for (_, lesson) in manifest.lessons() {
            let bytes = read(&base.join(&lesson.transcript_ref))?;
            transcripts.push(parse_transcript(&lesson.lesson_id, &bytes)?);
        }
        Self::new(manifest, transcripts)
    }

    pub fn manifest(&self) -> &CourseManifest {
        &self.manifest
    }

    pub fn course_id(&self) -> &str {
        &self.manifest.course_id
    }

    pub fn transcript(&self, lesson_id: &str) -> Option<&Transcript> {
        self.transcripts.get(lesson_id)
    }

    pub fn transcripts(&self) -> impl Iterator<Item = &Transcript> {
        self.transcripts.values()
    }

    /// Transcripts for the given lessons, deduplicated, in the order given.
    pub fn scoped<'a>(&'a self, lesson_ids: impl IntoIterator<Item = &'a str>) -> Vec<&'a Transcript> {
        let mut seen = std::collections::HashSet::new();
        lesson_ids
            .into_iter()
            .filter(|id| seen.insert(*id))
            .filter_map(|id| self.transcripts.get(id))
            .collect()
    }

    pub fn cue(&self, lesson_id: &str, cue_index: usize) -> Option<&Cue> {
        self.transcripts.get(lesson_id)?.cues.get(cue_index)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CorpusError> {
    std::fs::read(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
