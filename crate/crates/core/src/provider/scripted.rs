use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use serde_json::Value;

use super::{PromptEnvelope, Provider, ProviderError, RawCompletion};

/// Replays responses keyed by request hash. A hash may map to one text or to
/// a sequence; repeated calls with the same hash walk the sequence and then
/// keep returning its last element.
#[derive(Debug)]
pub struct ScriptedProvider {
    entries: BTreeMap<String, Vec<String>>,
    cursors: Mutex<HashMap<String, usize>>,
}

impl ScriptedProvider {
    pub fn from_entries(entries: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            entries,
            cursors: Mutex::new(HashMap::new()),
        }
    }

    /// Parses a script: a JSON object mapping hex digest to a response text
    /// or a list of response texts.
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ProviderError::ScriptParse(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(ProviderError::ScriptParse("script must be a JSON object".into()));
        };
        let mut entries = BTreeMap::new();
        for (hash, entry) in map {
            let texts = match entry {
                Value::String(s) => vec![s],
                Value::Array(items) if !items.is_empty() => items
                    .into_iter()
                    .map(|item| match item {
                        Value::String(s) => Ok(s),
                        _ => Err(ProviderError::ScriptParse(format!("entry {hash}: sequence items must be strings"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                _ => {
                    return Err(ProviderError::ScriptParse(format!(
                        "entry {hash}: expected a string or a non-empty list of strings"
                    )))
                }
            };
            entries.insert(hash, texts);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Loads a script file into a provider that answers only from it.
pub fn scripted_load(path: &Path) -> Result<ScriptedProvider, ProviderError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProviderError::ScriptParse(format!("{}: {e}", path.display())))?;
    ScriptedProvider::from_json(&text)
}

impl Provider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        let hash = envelope.request_hash();
        let Some(texts) = self.entries.get(hash) else {
            return Err(ProviderError::MissingFixture {
                request_hash: hash.to_string(),
                agent: envelope.agent(),
            });
        };
        let index = if texts.len() == 1 {
            0
        } else {
            let mut cursors = self.cursors.lock().unwrap();
            let cursor = cursors.entry(hash.to_string()).or_insert(0);
            let index = (*cursor).min(texts.len() - 1);
            *cursor += 1;
            index
        };
        Ok(RawCompletion {
            text: texts[index].clone(),
            latency_ms: 0,
        })
    }
}

/// Passes calls through to an inner provider and records every reply, so a
/// run can be replayed later with [`ScriptedProvider`].
pub struct RecordingProvider<P> {
    inner: P,
    recorded: Mutex<BTreeMap<String, Vec<String>>>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn entries(&self) -> BTreeMap<String, Vec<String>> {
        self.recorded.lock().unwrap().clone()
    }

    /// The recording as script JSON: sorted keys, one entry per line.
    pub fn to_script_json(&self) -> String {
        let entries = self.recorded.lock().unwrap();
        let map: serde_json::Map<String, Value> = entries
            .iter()
            .map(|(hash, texts)| {
                let value = if texts.len() == 1 {
                    Value::String(texts[0].clone())
                } else {
                    Value::Array(texts.iter().cloned().map(Value::String).collect())
                };
                (hash.clone(), value)
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&Value::Object(map)).expect("script serializes");
        out.push('\n');
        out
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        let reply = self.inner.send(envelope)?;
        let mut recorded = self.recorded.lock().unwrap();
        let texts = recorded.entry(envelope.request_hash().to_string()).or_default();
        // Identical replies to a repeated request collapse into one entry.
        if texts.last() != Some(&reply.text) || texts.len() > 1 {
            texts.push(reply.text.clone());
        }
        Ok(reply)
    }
}
