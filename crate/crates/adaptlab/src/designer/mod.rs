//! Iterative compensator synthesis.
//!
//! One designer round: simulate the scenario with the current gains,
//! summarize the reference/unknown discrepancy, ask a backend for a gain
//! delta, apply `params_next = params + delta`, and repeat until the
//! tracking error drops below tolerance or the iteration budget runs out.
//!
//! Backends: a deterministic rule set encoding the observe-diagnose-boost
//! reasoning trace, a chat-completions endpoint, and an offline replay of
//! a recorded endpoint transcript. Sessions are persisted after every
//! iteration so a crash never loses a finished round.

mod client;
mod parse;
mod prompt;
mod refine;
mod rules;

pub use client::{
    llm_design, ChatBackend, ChatMessage, ChatRequest, ChatTransport, HttpTransport,
    ReplayTransport, Transcript, TranscriptEntry,
};
pub use parse::{parse_direct_proposal, parse_proposal, parse_reply};
pub use prompt::{build_prompt, direct_controller_prompt, DesignPrompt, DEFAULT_TASK};
pub use refine::{refine_loop, Evaluation, Evaluator, RefineOptions};
pub use rules::{rule_based_design, RulesBackend, RulesConfig};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::controllers::{CompensatorParams, MitPidParams};
use crate::metrics::{DiagnosisLabelSet, TrackingStats};
use crate::Result;

/// Chat-completions endpoint settings. The credential is sourced from
/// the `LLM_API_KEY` environment variable, never from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// 0 keeps sessions reproducible; anything larger flags the session
    /// as nondeterministic.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout() -> u64 {
    30
}
fn default_retries() -> u32 {
    2
}

/// Environment variable holding the endpoint credential.
pub const API_KEY_ENV: &str = "LLM_API_KEY";

/// Sanity cap on any single parsed gain magnitude.
pub const DEFAULT_GAIN_CAP: f64 = 1e3;

/// What the designer is asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    /// Gain deltas for the additive compensation law.
    Compensator,
    /// A full controller from the adaptive-PID template family.
    DirectController,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Converged,
    MaxIterations,
    Faulted,
}

/// A parameter vector the refinement loop can step through.
pub trait ParamVector:
    Copy + Clone + PartialEq + Default + Serialize + DeserializeOwned + std::fmt::Debug
{
    fn add(&self, delta: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn is_finite(&self) -> bool;
    fn max_abs(&self) -> f64;
}

impl ParamVector for CompensatorParams {
    fn add(&self, delta: &Self) -> Self {
        CompensatorParams::add(self, delta)
    }
    fn sub(&self, other: &Self) -> Self {
        CompensatorParams::sub(self, other)
    }
    fn scale(&self, s: f64) -> Self {
        CompensatorParams::scale(self, s)
    }
    fn is_finite(&self) -> bool {
        CompensatorParams::is_finite(self)
    }
    fn max_abs(&self) -> f64 {
        self.kp
            .abs()
            .max(self.kd.abs())
            .max(self.kv.abs())
            .max(self.ki.abs())
    }
}

impl ParamVector for MitPidParams {
    fn add(&self, d: &Self) -> Self {
        MitPidParams {
            kp0: self.kp0 + d.kp0,
            ki0: self.ki0 + d.ki0,
            kd0: self.kd0 + d.kd0,
            gamma: self.gamma + d.gamma,
        }
    }
    fn sub(&self, o: &Self) -> Self {
        MitPidParams {
            kp0: self.kp0 - o.kp0,
            ki0: self.ki0 - o.ki0,
            kd0: self.kd0 - o.kd0,
            gamma: self.gamma - o.gamma,
        }
    }
    fn scale(&self, s: f64) -> Self {
        MitPidParams {
            kp0: self.kp0 * s,
            ki0: self.ki0 * s,
            kd0: self.kd0 * s,
            gamma: self.gamma * s,
        }
    }
    fn is_finite(&self) -> bool {
        [self.kp0, self.ki0, self.kd0, self.gamma]
            .iter()
            .all(|v| v.is_finite())
    }
    fn max_abs(&self) -> f64 {
        self.kp0
            .abs()
            .max(self.ki0.abs())
            .max(self.kd0.abs())
            .max(self.gamma.abs())
    }
}

/// A proposal vector that can be parsed out of a structured reply.
pub trait ProposalSchema: ParamVector {
    /// JSON field names the reply object must carry, in contract order.
    fn field_names() -> &'static [&'static str];
    fn from_fields(values: &[f64]) -> Self;
    /// Reply-format instruction appended to every prompt.
    fn reply_contract() -> &'static str;
}

impl ProposalSchema for CompensatorParams {
    fn field_names() -> &'static [&'static str] {
        &["kp", "kd", "kv", "ki"]
    }
    fn from_fields(v: &[f64]) -> Self {
        CompensatorParams::new(v[0], v[1], v[2], v[3])
    }
    fn reply_contract() -> &'static str {
        "Reply with exactly one JSON object of the form \
         {\"kp\": <delta>, \"kd\": <delta>, \"kv\": <delta>, \"ki\": <delta>, \
         \"rationale\": \"<one sentence>\"} giving additive corrections to the \
         current compensator gains."
    }
}

impl ProposalSchema for MitPidParams {
    fn field_names() -> &'static [&'static str] {
        &["kp0", "ki0", "kd0", "gamma"]
    }
    fn from_fields(v: &[f64]) -> Self {
        MitPidParams {
            kp0: v[0],
            ki0: v[1],
            kd0: v[2],
            gamma: v[3],
        }
    }
    fn reply_contract() -> &'static str {
        "Reply with exactly one JSON object of the form \
         {\"kp0\": <gain>, \"ki0\": <gain>, \"kd0\": <gain>, \"gamma\": <rate>, \
         \"rationale\": \"<one sentence>\"} parameterizing a PID controller whose \
         gains adapt online by the gradient rule theta' = gamma * e * phi."
    }
}

/// One backend round: the proposed step plus the reply it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<P> {
    pub delta: P,
    pub raw_reply: String,
    pub rationale: Option<String>,
}

/// Context handed to a backend when asking for a proposal.
pub struct ProposeCtx<'a, P> {
    pub iteration: u32,
    pub mode: DesignMode,
    pub prompt: &'a DesignPrompt,
    pub current: P,
    pub evaluation: &'a Evaluation,
    pub diagnosis: Option<&'a DiagnosisLabelSet>,
}

/// A compensator-design strategy.
pub trait DesignerBackend<P: ProposalSchema> {
    fn name(&self) -> &'static str;
    fn propose(&mut self, ctx: &ProposeCtx<'_, P>) -> Result<Proposal<P>>;
    /// True when proposals involve endpoint round trips.
    fn uses_network(&self) -> bool {
        false
    }
    /// True when repeated runs may yield different proposals.
    fn nondeterministic(&self) -> bool {
        false
    }
}

/// Record of one refinement iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<P> {
    pub index: u32,
    pub prompt: String,
    pub raw_reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    /// The applied step (after any backtracking halvings).
    pub delta: P,
    /// Parameters after applying the step: proposal[i] = proposal[i-1] + delta.
    pub proposal: P,
    pub run_stats: TrackingStats,
    pub halvings: u32,
    pub rolled_back: bool,
}

/// Full transcript of one design session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session<P> {
    pub mode: DesignMode,
    pub scenario: String,
    pub backend: String,
    /// Snapshot of the options driving the loop.
    pub config: serde_json::Value,
    pub initial: P,
    pub initial_stats: TrackingStats,
    pub iterations: Vec<IterationRecord<P>>,
    pub status: SessionStatus,
    pub nondeterministic: bool,
    pub final_params: P,
    /// Diagnostic for Faulted sessions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

/// The primary session type: compensator-mode design.
pub type DesignSession = Session<CompensatorParams>;

impl<P: ProposalSchema> Session<P> {
    /// Iterations run (excluding the initial evaluation).
    pub fn iteration_count(&self) -> u32 {
        self.iterations.len() as u32
    }

    pub fn converged(&self) -> bool {
        self.status == SessionStatus::Converged
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
