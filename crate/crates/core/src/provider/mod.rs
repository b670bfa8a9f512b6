//! Generative-model backends behind one interface.
//!
//! Every agent call goes through [`complete`] (or [`complete_typed`]): the raw
//! reply is checked against the envelope's response schema, one reformat
//! retry is attempted on failure, and a second failure surfaces as
//! [`ProviderError::Schema`] carrying both raw replies.

mod author;
mod envelope;
mod live;
pub mod payloads;
pub mod schema;
mod scripted;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use author::{Concept, FixtureAuthor};
pub use envelope::{AgentKind, ContextBlock, EnvelopeBuilder, PromptEnvelope};
pub use live::LiveProvider;
pub use schema::{validate_payload, PayloadError};
pub use scripted::{scripted_load, RecordingProvider, ScriptedProvider};

/// Bumped whenever any prompt template changes. Part of every system prompt,
/// so it invalidates recorded scripts.
pub const TEMPLATE_VERSION: &str = "learnmate-prompts/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider timed out")]
    Timeout,
    #[error("response failed schema validation after retry: {}", violations.join("; "))]
    Schema {
        raw_texts: Vec<String>,
        violations: Vec<String>,
    },
    #[error("no scripted response for request {request_hash} ({agent:?})")]
    MissingFixture { request_hash: String, agent: AgentKind },
    #[error("unknown response schema `{0}`")]
    UnknownSchema(String),
    #[error("invalid script: {0}")]
    ScriptParse(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCompletion {
    pub text: String,
    pub latency_ms: u64,
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;

    /// Sends one envelope and returns the model's raw reply.
    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelResponse {
    pub raw_text: String,
    /// Present iff `raw_text` passed validation.
    pub payload: Option<Value>,
    pub provider_name: String,
    pub latency_ms: u64,
}

/// Sends `envelope` and validates the reply against its schema.
pub fn complete(provider: &dyn Provider, envelope: &PromptEnvelope) -> Result<ModelResponse, ProviderError> {
    complete_checked(provider, envelope, |_| Vec::new())
}

/// Like [`complete`], with extra domain checks that take part in the retry.
pub fn complete_checked(
    provider: &dyn Provider,
    envelope: &PromptEnvelope,
    check: impl Fn(&Value) -> Vec<String>,
) -> Result<ModelResponse, ProviderError> {
    if !schema::is_registered(envelope.response_schema_id()) {
        return Err(ProviderError::UnknownSchema(envelope.response_schema_id().to_string()));
    }
    let validate = |raw: &str| -> Result<Value, Vec<String>> {
        let value = match validate_payload(raw, envelope.response_schema_id()) {
            Ok(v) => v,
            Err(PayloadError::Invalid(v)) => return Err(v),
            Err(PayloadError::UnknownSchema(id)) => return Err(vec![format!("unknown schema {id}")]),
        };
        let extra = check(&value);
        if extra.is_empty() {
            Ok(value)
        } else {
            Err(extra)
        }
    };

    let first = provider.send(envelope)?;
    let violations = match validate(&first.text) {
        Ok(payload) => return Ok(response(provider, first, payload)),
        Err(v) => v,
    };
    tracing::debug!(agent = ?envelope.agent(), ?violations, "reply rejected, asking for a reformat");
    let retry = envelope.reformat_request(&first.text, &violations);
    let second = provider.send(&retry)?;
    match validate(&second.text) {
        Ok(payload) => Ok(response(provider, second, payload)),
        Err(violations) => Err(ProviderError::Schema {
            raw_texts: vec![first.text, second.text],
            violations,
        }),
    }
}

fn response(provider: &dyn Provider, raw: RawCompletion, payload: Value) -> ModelResponse {
    ModelResponse {
        raw_text: raw.text,
        payload: Some(payload),
        provider_name: provider.name().to_string(),
        latency_ms: raw.latency_ms,
    }
}

/// Validates, deserializes into `T`, then applies `check` to the typed value.
pub fn complete_typed<T: DeserializeOwned>(
    provider: &dyn Provider,
    envelope: &PromptEnvelope,
    check: impl Fn(&T) -> Vec<String>,
) -> Result<T, ProviderError> {
    let response = complete_checked(provider, envelope, |value| {
        match serde_json::from_value::<T>(value.clone()) {
            Ok(typed) => check(&typed),
            Err(e) => vec![format!("$: {e}")],
        }
    })?;
    let payload = response.payload.expect("validated response has a payload");
    Ok(serde_json::from_value(payload).expect("checked during validation"))
}
