use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentKind {
    Planner,
    PlanRepair,
    QA,
    TierExpand,
    QuizGen,
    QuizAnalysis,
    Adaptation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub label: String,
    pub text: String,
}

impl ContextBlock {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            text: text.into(),
        }
    }

    /// A block whose text is the canonical JSON of `value`.
    pub fn json<T: Serialize + ?Sized>(label: impl Into<String>, value: &T) -> Self {
        Self::new(label, canonical::to_string(value))
    }
}

/// Everything sent to a model for one agent call. `request_hash` is the
/// SHA-256 of the canonical serialization of all other fields, so it is fixed
/// at construction and the fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptEnvelope {
    agent: AgentKind,
    system_text: String,
    user_text: String,
    context_blocks: Vec<ContextBlock>,
    response_schema_id: String,
    request_hash: String,
}

impl PromptEnvelope {
    pub fn builder(agent: AgentKind) -> EnvelopeBuilder {
        EnvelopeBuilder {
            agent,
            system_text: String::new(),
            user_text: String::new(),
            context_blocks: Vec::new(),
            response_schema_id: String::new(),
        }
    }

    pub fn agent(&self) -> AgentKind {
        self.agent
    }

    pub fn system_text(&self) -> &str {
        &self.system_text
    }

    pub fn user_text(&self) -> &str {
        &self.user_text
    }

    pub fn context_blocks(&self) -> &[ContextBlock] {
        &self.context_blocks
    }

    pub fn response_schema_id(&self) -> &str {
        &self.response_schema_id
    }

    pub fn request_hash(&self) -> &str {
        &self.request_hash
    }

    /// Text of the first context block with this label.
    pub fn context(&self, label: &str) -> Option<&str> {
        self.context_blocks
            .iter()
            .find(|b| b.label == label)
            .map(|b| b.text.as_str())
    }

    pub fn contexts_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a ContextBlock> {
        self.context_blocks.iter().filter(move |b| b.label.starts_with(prefix))
    }

    /// The follow-up request sent after a response fails validation: the
    /// same envelope with the rejected output and the violations appended.
    pub fn reformat_request(&self, rejected: &str, violations: &[String]) -> PromptEnvelope {
        let mut user_text = self.user_text.clone();
        user_text.push_str("\n\nYour previous reply could not be accepted:\n");
        for v in violations {
            user_text.push_str("- ");
            user_text.push_str(v);
            user_text.push('\n');
        }
        user_text.push_str(&format!(
            "Reply again with a single JSON object that satisfies schema `{}`. No prose outside the JSON.",
            self.response_schema_id
        ));
        let mut builder = PromptEnvelope::builder(self.agent)
            .system(self.system_text.clone())
            .user(user_text)
            .schema(self.response_schema_id.clone());
        for block in &self.context_blocks {
            builder = builder.block(block.clone());
        }
        builder.block(ContextBlock::new("rejected_reply", rejected)).build()
    }
}

fn compute_hash(
    agent: AgentKind,
    system_text: &str,
    user_text: &str,
    context_blocks: &[ContextBlock],
    response_schema_id: &str,
) -> String {
    let body = json!({
        "agent": agent,
        "system_text": system_text,
        "user_text": user_text,
        "context_blocks": context_blocks,
        "response_schema_id": response_schema_id,
    });
    hex::encode(Sha256::digest(canonical::value_to_string(&body).as_bytes()))
}

/// Collects envelope fields in any order; the hash is computed once in
/// [`EnvelopeBuilder::build`].
#[derive(Debug, Clone)]
pub struct EnvelopeBuilder {
    agent: AgentKind,
    system_text: String,
    user_text: String,
    context_blocks: Vec<ContextBlock>,
    response_schema_id: String,
}

impl EnvelopeBuilder {
    pub fn system(mut self, text: impl Into<String>) -> Self {
        self.system_text = text.into();
        self
    }

    pub fn user(mut self, text: impl Into<String>) -> Self {
        self.user_text = text.into();
        self
    }

    pub fn block(mut self, block: ContextBlock) -> Self {
        self.context_blocks.push(block);
        self
    }

    pub fn schema(mut self, schema_id: impl Into<String>) -> Self {
        self.response_schema_id = schema_id.into();
        self
    }

    pub fn build(self) -> PromptEnvelope {
        let request_hash = compute_hash(
            self.agent,
            &self.system_text,
            &self.user_text,
            &self.context_blocks,
            &self.response_schema_id,
        );
        PromptEnvelope {
            agent: self.agent,
            system_text: self.system_text,
            user_text: self.user_text,
            context_blocks: self.context_blocks,
            response_schema_id: self.response_schema_id,
            request_hash,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_order_does_not_change_the_hash() {
        let a = PromptEnvelope::builder(AgentKind::QA)
            .system("sys")
            .user("user")
            .block(ContextBlock::new("x", "1"))
            .schema("qa_answer.v1")
            .build();
        let b = PromptEnvelope::builder(AgentKind::QA)
            .schema("qa_answer.v1")
            .block(ContextBlock::new("x", "1"))
            .user("user")
            .system("sys")
            .build();
        assert_eq!(a.request_hash(), b.request_hash());
        assert_eq!(a.request_hash().len(), 64);
    }

    #[test]
    fn any_field_change_changes_the_hash() {
        let base = PromptEnvelope::builder(AgentKind::QA).system("s").user("u").schema("q").build();
        let other_agent = PromptEnvelope::builder(AgentKind::QuizGen).system("s").user("u").schema("q").build();
        let other_block = PromptEnvelope::builder(AgentKind::QA)
            .system("s")
            .user("u")
            .schema("q")
            .block(ContextBlock::new("k", "v"))
            .build();
        assert_ne!(base.request_hash(), other_agent.request_hash());
        assert_ne!(base.request_hash(), other_block.request_hash());
    }

    #[test]
    fn reformat_request_keeps_context_and_schema() {
        let base = PromptEnvelope::builder(AgentKind::QuizGen)
            .user("make a quiz")
            .schema("quiz.v1")
            .block(ContextBlock::new("lesson", "text"))
            .build();
        let retry = base.reformat_request("{}", &["$.questions: missing".into()]);
        assert_eq!(retry.response_schema_id(), "quiz.v1");
        assert_eq!(retry.context("lesson"), Some("text"));
        assert_eq!(retry.context("rejected_reply"), Some("{}"));
        assert!(retry.user_text().contains("$.questions: missing"));
        assert_ne!(retry.request_hash(), base.request_hash());
    }
}
