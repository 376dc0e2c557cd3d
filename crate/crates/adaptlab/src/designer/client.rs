//! Chat-completions client: wire protocol, transports, and transcripts.
//!
//! The wire protocol is a single POST carrying model, message list, and
//! temperature; the reply text is read from the first choice's message
//! content. Transports are swappable: live HTTP, or an offline replay of
//! a recorded transcript. Every request/response pair can be recorded for
//! later replay, which is how endpoint-backed sessions become testable.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{
    DesignerBackend, EndpointConfig, Proposal, ProposalSchema, ProposeCtx, API_KEY_ENV,
    DEFAULT_GAIN_CAP,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn single_user(cfg: &EndpointConfig, prompt_text: &str) -> Self {
        ChatRequest {
            model: cfg.model_name.clone(),
            messages: vec![ChatMessage {
                role: "user".to_string(),
                content: prompt_text.to_string(),
            }],
            temperature: cfg.temperature,
        }
    }
}

/// One round trip over some transport; returns the reply content text.
pub trait ChatTransport {
    fn complete(&mut self, cfg: &EndpointConfig, request: &ChatRequest) -> Result<String>;
    fn is_network(&self) -> bool {
        false
    }
}

/// Live HTTP transport speaking the chat-completions wire format.
pub struct HttpTransport;

impl ChatTransport for HttpTransport {
    fn complete(&mut self, cfg: &EndpointConfig, request: &ChatRequest) -> Result<String> {
        let agent = ureq::AgentBuilder::new()
            .timeout(std::time::Duration::from_secs(cfg.timeout_secs))
            .build();
        let mut req = agent
            .post(&cfg.base_url)
            .set("content-type", "application/json");
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                req = req.set("authorization", &format!("Bearer {}", key));
            }
        }
        let body = serde_json::to_string(request)?;
        let response = req
            .send_string(&body)
            .map_err(|e| Error::Endpoint(format!("request to {} failed: {}", cfg.base_url, e)))?;
        let text = response
            .into_string()
            .map_err(|e| Error::Endpoint(format!("reading endpoint reply: {}", e)))?;
        extract_content(&text)
    }

    fn is_network(&self) -> bool {
        true
    }
}

/// Pull the first choice's message content out of a reply body.
pub fn extract_content(body: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| Error::Endpoint(format!("endpoint reply is not JSON: {}", e)))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(|s| s.to_string())
        .ok_or_else(|| Error::Endpoint("reply carries no choices[0].message.content".into()))
}

/// A recorded request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request: ChatRequest,
    pub reply: String,
}

/// Recorded session transcript, replayable offline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::harness::write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

/// Serves recorded replies in order, verifying each incoming request
/// matches the recorded one so prompt drift is caught immediately.
pub struct ReplayTransport {
    transcript: Transcript,
    cursor: usize,
}

impl ReplayTransport {
    pub fn new(transcript: Transcript) -> Self {
        ReplayTransport {
            transcript,
            cursor: 0,
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Ok(ReplayTransport::new(Transcript::load(path)?))
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(&mut self, _cfg: &EndpointConfig, request: &ChatRequest) -> Result<String> {
        let entry = self.transcript.entries.get(self.cursor).ok_or_else(|| {
            Error::Endpoint(format!(
                "transcript exhausted after {} entries",
                self.cursor
            ))
        })?;
        if entry.request.messages != request.messages {
            return Err(Error::Endpoint(format!(
                "transcript divergence at entry {}: request does not match recording",
                self.cursor
            )));
        }
        self.cursor += 1;
        Ok(entry.reply.clone())
    }
}

/// One chat-completion round trip for a design prompt; the reply text
/// comes back raw for the caller to parse.
pub fn llm_design(prompt: &super::DesignPrompt, endpoint: &EndpointConfig) -> Result<String> {
    let mut backend = ChatBackend::new(endpoint.clone(), HttpTransport);
    backend.round_trip(&prompt.to_text())
}

/// Endpoint-backed designer: one chat round trip per proposal, with
/// bounded retries on transport faults and optional transcript recording.
pub struct ChatBackend<T: ChatTransport> {
    pub cfg: EndpointConfig,
    transport: T,
    record_to: Option<PathBuf>,
    recorded: Transcript,
    requests_sent: usize,
}

impl<T: ChatTransport> ChatBackend<T> {
    pub fn new(cfg: EndpointConfig, transport: T) -> Self {
        ChatBackend {
            cfg,
            transport,
            record_to: None,
            recorded: Transcript::default(),
            requests_sent: 0,
        }
    }

    /// Record every round trip to `path` (written after each entry).
    pub fn recording_to(mut self, path: PathBuf) -> Self {
        self.record_to = Some(path);
        self
    }

    pub fn requests_sent(&self) -> usize {
        self.requests_sent
    }

    pub fn transcript(&self) -> &Transcript {
        &self.recorded
    }

    fn round_trip(&mut self, prompt_text: &str) -> Result<String> {
        let request = ChatRequest::single_user(&self.cfg, prompt_text);
        let mut last_err = None;
        for _attempt in 0..=self.cfg.max_retries {
            self.requests_sent += 1;
            match self.transport.complete(&self.cfg, &request) {
                Ok(reply) => {
                    self.recorded.entries.push(TranscriptEntry {
                        request: request.clone(),
                        reply: reply.clone(),
                    });
                    if let Some(path) = &self.record_to {
                        self.recorded.save(path)?;
                    }
                    return Ok(reply);
                }
                Err(e @ Error::Endpoint(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Endpoint("no attempts made".into())))
    }
}

impl<T: ChatTransport, P: ProposalSchema> DesignerBackend<P> for ChatBackend<T> {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn propose(&mut self, ctx: &ProposeCtx<'_, P>) -> Result<Proposal<P>> {
        let reply = self.round_trip(&ctx.prompt.to_text())?;
        let (delta, rationale) = super::parse::parse_reply::<P>(&reply, DEFAULT_GAIN_CAP)?;
        Ok(Proposal {
            delta,
            raw_reply: reply,
            rationale,
        })
    }

    fn uses_network(&self) -> bool {
        self.transport.is_network()
    }

    fn nondeterministic(&self) -> bool {
        self.cfg.temperature > 0.0
    }
}
