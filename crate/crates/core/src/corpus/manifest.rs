use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseManifest {
    pub course_id: String,
    pub title: String,
    pub units: Vec<Unit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub unit_id: String,
    pub title: String,
    pub order: i64,
    pub lessons: Vec<Lesson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lesson {
    pub lesson_id: String,
    pub title: String,
    #[serde(default)]
    pub video_url: Option<String>,
    pub transcript_ref: String,
    pub est_minutes: u32,
    #[serde(default)]
    pub prerequisites: Vec<String>,
    #[serde(default)]
    pub curated_resources: Vec<Resource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub url: String,
    pub label: String,
    pub provenance_label: ProvenanceLabel,
}

/// Source-trust tag shown next to every resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProvenanceLabel {
    #[serde(rename = "course-verified")]
    CourseVerified,
    #[serde(rename = "external-curated")]
    ExternalCurated,
    #[serde(rename = "low-confidence")]
    LowConfidence,
}

impl ProvenanceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ProvenanceLabel::CourseVerified => "course-verified",
            ProvenanceLabel::ExternalCurated => "external-curated",
            ProvenanceLabel::LowConfidence => "low-confidence",
        }
    }
}

impl CourseManifest {
    pub fn lessons(&self) -> impl Iterator<Item = (&Unit, &Lesson)> {
        self.units
            .iter()
            .flat_map(|u| u.lessons.iter().map(move |l| (u, l)))
    }

    pub fn lesson(&self, lesson_id: &str) -> Option<&Lesson> {
        self.lessons().map(|(_, l)| l).find(|l| l.lesson_id == lesson_id)
    }

    pub fn unit(&self, unit_id: &str) -> Option<&Unit> {
        self.units.iter().find(|u| u.unit_id == unit_id)
    }

    pub fn unit_of(&self, lesson_id: &str) -> Option<&Unit> {
        self.lessons()
            .find(|(_, l)| l.lesson_id == lesson_id)
            .map(|(u, _)| u)
    }

    /// Lesson id to its position in course order.
    pub fn lesson_positions(&self) -> HashMap<&str, usize> {
        self.lessons()
            .enumerate()
            .map(|(i, (_, l))| (l.lesson_id.as_str(), i))
            .collect()
    }

    pub fn lesson_count(&self) -> usize {
        self.units.iter().map(|u| u.lessons.len()).sum()
    }
}

/// Parses and fully validates a JSON course manifest.
pub fn parse_manifest(bytes: &[u8]) -> Result<CourseManifest, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CorpusError::Parse {
        line: 0,
        column: 0,
        message: format!("manifest is not UTF-8: {e}"),
    })?;
    let manifest: CourseManifest = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    check_manifest(&manifest)?;
    Ok(manifest)
}

pub fn check_manifest(manifest: &CourseManifest) -> Result<(), CorpusError> {
    let mut ids = HashSet::new();
    let mut previous_order = None;
    for unit in &manifest.units {
        if !ids.insert(unit.unit_id.as_str()) {
            return Err(CorpusError::DuplicateId(unit.unit_id.clone()));
        }
        if let Some(prev) = previous_order {
            if unit.order <= prev {
                return Err(CorpusError::InvalidManifest(format!(
                    "unit `{}` has order {} after order {prev}",
                    unit.unit_id, unit.order
                )));
            }
        }
        previous_order = Some(unit.order);
        for lesson in &unit.lessons {
            if !ids.insert(lesson.lesson_id.as_str()) {
                return Err(CorpusError::DuplicateId(lesson.lesson_id.clone()));
            }
            if lesson.est_minutes == 0 {
                return Err(CorpusError::InvalidManifest(format!(
                    "lesson `{}` has zero est_minutes",
                    lesson.lesson_id
                )));
            }
            if let Some(r) = lesson
                .curated_resources
                .iter()
                .find(|r| r.provenance_label == ProvenanceLabel::LowConfidence)
            {
                return Err(CorpusError::InvalidManifest(format!(
                    "curated resource `{}` on lesson `{}` cannot be low-confidence",
                    r.url, lesson.lesson_id
                )));
            }
        }
    }

    let graph: BTreeMap<&str, &[String]> = manifest
        .lessons()
        .map(|(_, l)| (l.lesson_id.as_str(), l.prerequisites.as_slice()))
        .collect();
    for (lesson, prereqs) in &graph {
        if let Some(missing) = prereqs.iter().find(|p| !graph.contains_key(p.as_str())) {
            return Err(CorpusError::InvalidManifest(format!(
                "lesson `{lesson}` requires unknown lesson `{missing}`"
            )));
        }
    }
    if let Some(cycle) = find_cycle(&graph) {
        return Err(CorpusError::Cycle(cycle));
    }
    Ok(())
}

/// Depth-first search over the prerequisite graph; returns the lessons on the
/// first cycle found, in traversal order.
fn find_cycle(graph: &BTreeMap<&str, &[String]>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        OnStack,
        Done,
    }
    let mut marks: HashMap<&str, Mark> = graph.keys().map(|k| (*k, Mark::Fresh)).collect();

    fn visit<'a>(
        node: &'a str,
        graph: &BTreeMap<&'a str, &'a [String]>,
        marks: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(node, Mark::OnStack);
        stack.push(node);
        for next in graph[node].iter() {
            let next = graph.get_key_value(next.as_str()).map(|(k, _)| *k)?;
            match marks[next] {
                Mark::OnStack => {
                    let from = stack.iter().position(|n| *n == next).unwrap();
                    return Some(stack[from..].iter().map(|s| s.to_string()).collect());
                }
                Mark::Fresh => {
                    if let Some(cycle) = visit(next, graph, marks, stack) {
                        return Some(cycle);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(node, Mark::Done);
        None
    }

    for node in graph.keys() {
        if marks[node] == Mark::Fresh {
            let mut stack = Vec::new();
            if let Some(cycle) = visit(node, graph, &mut marks, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}
