use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{PromptEnvelope, Provider, ProviderError, RawCompletion};

/// Thin client for an OpenAI-compatible `chat/completions` endpoint.
///
/// Configured from `PROVIDER_BASE_URL`, `PROVIDER_MODEL` and
/// `PROVIDER_API_KEY`. Not used by any test.
pub struct LiveProvider {
    base_url: String,
    model: String,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveProvider {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key: api_key.into(),
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(120)).build(),
        }
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        let var = |name: &str| {
            std::env::var(name).map_err(|_| ProviderError::Unavailable(format!("{name} is not set")))
        };
        Ok(Self::new(var("PROVIDER_BASE_URL")?, var("PROVIDER_MODEL")?, var("PROVIDER_API_KEY")?))
    }

    fn user_message(envelope: &PromptEnvelope) -> String {
        let mut text = String::new();
        for block in envelope.context_blocks() {
            text.push_str(&format!("<{}>\n{}\n</{}>\n\n", block.label, block.text, block.label));
        }
        text.push_str(envelope.user_text());
        text
    }
}

impl Provider for LiveProvider {
    fn name(&self) -> &str {
        &self.model
    }

    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": envelope.system_text()},
                {"role": "user", "content": Self::user_message(envelope)},
            ],
            "response_format": {"type": "json_object"},
        });
        let started = Instant::now();
        let reply = self
            .agent
            .post(&format!("{}/chat/completions", self.base_url))
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::Transport(t) if t.kind() == ureq::ErrorKind::Io => ProviderError::Timeout,
                other => ProviderError::Unavailable(other.to_string()),
            })?;
        let value: Value = reply
            .into_json()
            .map_err(|e| ProviderError::Unavailable(format!("unreadable reply: {e}")))?;
        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| ProviderError::Unavailable("reply has no message content".into()))?
            .to_string();
        Ok(RawCompletion {
            text,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
