//! Agent decision policies.
//!
//! A policy maps the per-turn [`ContextView`] plus its own random stream to
//! an [`ActionDecision`]. The engine validates every decision and records a
//! neutral fallback flagged `policy_error` when a policy fails.

mod backend;
mod replay;
mod scripted;

pub use backend::{
    backend_decide, parse_backend_reply, render_decision, render_messages, BackendConfig,
    BackendPolicy, ChatMessage, ChatRequest, HttpTransport, ParseError, PromptTemplate, Transport,
    TransportError, ENDPOINT_ENV, EXPLICIT_SYSTEM_PROMPT, NEUTRAL_SYSTEM_PROMPT,
};
pub use replay::ReplayPolicy;
pub use scripted::{ActionRates, ParamsError, ScriptedParams, ScriptedPolicy};

use thiserror::Error;

use crate::engine::ContextView;
use crate::model::ActionDecision;
use crate::streams::StreamRng;

pub type PolicyRng = StreamRng;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("reply could not be parsed: {0}")]
    Parse(#[from] ParseError),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted {
        attempts: u32,
        last: Box<PolicyError>,
    },
    #[error("replay mismatch: {0}")]
    Replay(String),
}

pub trait Policy {
    /// Must be deterministic given the context and the state of `rng`.
    fn decide(
        &mut self,
        context: &ContextView,
        rng: &mut PolicyRng,
    ) -> Result<ActionDecision, PolicyError>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn decide(
        &mut self,
        context: &ContextView,
        rng: &mut PolicyRng,
    ) -> Result<ActionDecision, PolicyError> {
        (**self).decide(context, rng)
    }
}
