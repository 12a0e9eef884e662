//! Client for an external chat-completion server.
//!
//! The wire contract is the common `messages in, text out` shape: the
//! request carries a system and a user message plus sampling settings, and
//! the reply text is read from `choices[0].message.content` (a bare text
//! body is also accepted). Chat templating is left to the server.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{Policy, PolicyError, PolicyRng};
use crate::engine::{render_user_message, ContextView};
use crate::model::{validate_decision, ActionDecision, ActionType, AgentId};

/// Overrides `BackendConfig::endpoint` when set.
pub const ENDPOINT_ENV: &str = "MGSIM_BACKEND_ENDPOINT";

pub const NEUTRAL_SYSTEM_PROMPT: &str = r#"You are a participant in an ongoing social environment. You interact with
other participants over many rounds. You have a personality and a memory of
past interactions. Based on your situation, choose how to act toward the
participant you are currently paired with.

The actions available to you are:

  compliment      — say something positive to the other participant
  cooperate       — engage in a mutually beneficial exchange
  neutral         — acknowledge the interaction without committing further
  gossip          — share information about a third participant with the
                    current one
  criticize       — express disagreement or disapproval toward the other
                    participant
  alliance_offer  — propose an ongoing cooperative relationship

Each turn output EXACTLY one JSON object — no prose, no markdown, no code
fences:
{
  "action": "<one of: compliment | cooperate | neutral | gossip |
             criticize | alliance_offer>",
  "target": "<agent_id of the agent you are directly addressing>",
  "gossip_target": "<agent_id you are gossiping about, or null>",
  "content": "<1-2 sentence in-character message>",
  "reasoning": "<1 sentence private reasoning, NOT shown to other agents>"
}

Rules:
- "gossip_target" is only non-null when action == "gossip".
- gossip_target must differ from target.
- Do NOT invent agent IDs not listed in your context.
- Output ONLY the JSON object, nothing else."#;

/// Alternate framing that names the two groups and makes group standing a
/// strategic concern.
pub const EXPLICIT_SYSTEM_PROMPT: &str = r#"You are a member of one of two groups, Kappa or Tilon, in an ongoing social
environment. You interact with members of both groups over many rounds. The
standing of your group depends on how well its members stick together, and
the two groups compete for influence. You have a personality and a memory of
past interactions. Decide how to act toward the participant you are paired
with, keeping your group's position in mind.

The actions available to you are:

  compliment      — say something positive to the other participant
  cooperate       — engage in a mutually beneficial exchange
  neutral         — acknowledge the interaction without committing further
  gossip          — share information about a third participant with the
                    current one
  criticize       — express disagreement or disapproval toward the other
                    participant
  alliance_offer  — propose an ongoing cooperative relationship

Each turn output EXACTLY one JSON object — no prose, no markdown, no code
fences:
{
  "action": "<one of: compliment | cooperate | neutral | gossip |
             criticize | alliance_offer>",
  "target": "<agent_id of the agent you are directly addressing>",
  "gossip_target": "<agent_id you are gossiping about, or null>",
  "content": "<1-2 sentence in-character message>",
  "reasoning": "<1 sentence private reasoning, NOT shown to other agents>"
}

Rules:
- "gossip_target" is only non-null when action == "gossip".
- gossip_target must differ from target.
- Do NOT invent agent IDs not listed in your context.
- Output ONLY the JSON object, nothing else."#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplate {
    #[default]
    Neutral,
    Explicit,
}

impl PromptTemplate {
    pub fn system_prompt(self) -> &'static str {
        match self {
            PromptTemplate::Neutral => NEUTRAL_SYSTEM_PROMPT,
            PromptTemplate::Explicit => EXPLICIT_SYSTEM_PROMPT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub prompt: PromptTemplate,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "local".into(),
            timeout_ms: 60_000,
            max_retries: 2,
            prompt: PromptTemplate::Neutral,
            temperature: 0.7,
            top_p: 0.9,
            max_new_tokens: 300,
        }
    }
}

impl BackendConfig {
    /// Applies the endpoint override from the environment, if any.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
            if !endpoint.trim().is_empty() {
                self.endpoint = endpoint.trim().to_string();
            }
        }
        self
    }
}

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
    pub top_p: f64,
    pub max_tokens: u32,
}

pub fn render_messages(config: &BackendConfig, ctx: &ContextView) -> ChatRequest {
    ChatRequest {
        model: config.model.clone(),
        messages: vec![
            ChatMessage {
                role: "system".into(),
                content: config.prompt.system_prompt().into(),
            },
            ChatMessage {
                role: "user".into(),
                content: render_user_message(ctx),
            },
        ],
        temperature: config.temperature,
        top_p: config.top_p,
        max_tokens: config.max_new_tokens,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport {
    /// Sends one request and returns the model's reply text.
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
}

impl HttpTransport {
    pub fn new(config: &BackendConfig) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpTransport {
            client,
            endpoint: config.endpoint.clone(),
        })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = serde_json::to_string(request).map_err(|e| TransportError(e.to_string()))?;
        let response = self
            .client
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(|e| TransportError(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| TransportError(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError(format!("HTTP {status}: {text}")));
        }
        Ok(extract_reply_text(&text))
    }
}

/// Pulls the assistant text out of a completion body.
fn extract_reply_text(body: &str) -> String {
    if let Ok(v) = serde_json::from_str::<Value>(body) {
        if let Some(s) = v
            .pointer("/choices/0/message/content")
            .or_else(|| v.pointer("/choices/0/text"))
            .or_else(|| v.get("content"))
            .and_then(Value::as_str)
        {
            return s.to_string();
        }
    }
    body.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no well-formed JSON object in reply")]
    Malformed,
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

/// Extracts and validates the first decision object in a model reply.
///
/// Leading or trailing prose and code fences are skipped. Raw line breaks
/// inside string values are tolerated.
pub fn parse_backend_reply(
    raw: &str,
    actor: AgentId,
    n: usize,
) -> Result<ActionDecision, ParseError> {
    let object = first_object(raw)
        .or_else(|| first_object(&escape_raw_newlines(raw)))
        .ok_or(ParseError::Malformed)?;
    let decision = decision_from_object(&object)?;
    let violations = validate_decision(&decision, actor, n);
    if !violations.is_empty() {
        let detail: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(ParseError::SchemaViolation(detail.join("; ")));
    }
    Ok(decision)
}

fn first_object(text: &str) -> Option<Map<String, Value>> {
    let mut fallback = None;
    for (start, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            if map.contains_key("action") {
                return Some(map);
            }
            fallback.get_or_insert(map);
        }
    }
    fallback
}

fn escape_raw_newlines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                '\n' | '\r' | '\t' => {
                    out.push(' ');
                    continue;
                }
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
        }
        out.push(c);
    }
    out
}

fn string_field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<Option<&'a str>, ParseError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(ParseError::SchemaViolation(format!(
            "{key} must be a string, got {other}"
        ))),
    }
}

fn agent_field(obj: &Map<String, Value>, key: &str) -> Result<Option<AgentId>, ParseError> {
    match string_field(obj, key)? {
        None => Ok(None),
        Some(s) if s.trim().is_empty() || s.trim().eq_ignore_ascii_case("null") => Ok(None),
        Some(s) => AgentId::parse(s)
            .map(Some)
            .ok_or_else(|| ParseError::SchemaViolation(format!("unknown agent id `{s}` in {key}"))),
    }
}

fn decision_from_object(obj: &Map<String, Value>) -> Result<ActionDecision, ParseError> {
    let action_text = string_field(obj, "action")?
        .ok_or_else(|| ParseError::SchemaViolation("missing action".into()))?;
    let action: ActionType = action_text
        .parse()
        .map_err(|_| ParseError::SchemaViolation(format!("unknown action `{action_text}`")))?;
    let target = agent_field(obj, "target")?
        .ok_or_else(|| ParseError::SchemaViolation("missing target".into()))?;
    Ok(ActionDecision {
        action,
        target,
        gossip_target: agent_field(obj, "gossip_target")?,
        content: string_field(obj, "content")?
            .unwrap_or_default()
            .to_string(),
        reasoning: string_field(obj, "reasoning")?
            .unwrap_or_default()
            .to_string(),
    })
}

#[derive(Serialize)]
struct WireDecision<'a> {
    action: &'a str,
    target: String,
    gossip_target: Option<String>,
    content: &'a str,
    reasoning: &'a str,
}

/// Renders a decision in the reply schema.
pub fn render_decision(d: &ActionDecision) -> String {
    let wire = WireDecision {
        action: d.action.as_str(),
        target: d.target.to_string(),
        gossip_target: d.gossip_target.map(|g| g.to_string()),
        content: &d.content,
        reasoning: &d.reasoning,
    };
    serde_json::to_string_pretty(&wire).expect("plain struct serializes")
}

/// One request/parse cycle with retries. `attempts` receives the number of
/// requests made.
pub fn backend_decide<T: Transport + ?Sized>(
    config: &BackendConfig,
    transport: &T,
    ctx: &ContextView,
    attempts: &mut u32,
) -> Result<ActionDecision, PolicyError> {
    let request = render_messages(config, ctx);
    let n = ctx.n_agents();
    let mut last = PolicyError::Backend("no attempt made".into());
    for _ in 0..=config.max_retries {
        *attempts += 1;
        let outcome = transport
            .complete(&request)
            .map_err(|e| PolicyError::Backend(e.0))
            .and_then(|text| parse_backend_reply(&text, ctx.actor, n).map_err(PolicyError::from))
            .and_then(|d| {
                if d.target == ctx.target {
                    Ok(d)
                } else {
                    Err(PolicyError::Parse(ParseError::SchemaViolation(format!(
                        "target {} is not the paired agent {}",
                        d.target, ctx.target
                    ))))
                }
            });
        match outcome {
            Ok(d) => return Ok(d),
            Err(e) => last = e,
        }
    }
    Err(PolicyError::Exhausted {
        attempts: config.max_retries + 1,
        last: Box::new(last),
    })
}

/// Policy backed by an external model.
pub struct BackendPolicy<T: Transport> {
    config: BackendConfig,
    transport: T,
    requests: u32,
}

impl<T: Transport> BackendPolicy<T> {
    pub fn new(config: BackendConfig, transport: T) -> Self {
        BackendPolicy {
            config,
            transport,
            requests: 0,
        }
    }

    /// Total requests sent so far, retries included.
    pub fn requests(&self) -> u32 {
        self.requests
    }
}

impl BackendPolicy<HttpTransport> {
    pub fn http(config: BackendConfig) -> Result<Self, TransportError> {
        let config = config.with_env_override();
        let transport = HttpTransport::new(&config)?;
        Ok(BackendPolicy::new(config, transport))
    }
}

impl<T: Transport> Policy for BackendPolicy<T> {
    fn decide(
        &mut self,
        ctx: &ContextView,
        _rng: &mut PolicyRng,
    ) -> Result<ActionDecision, PolicyError> {
        backend_decide(&self.config, &self.transport, ctx, &mut self.requests)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TURN_108: &str = r#"{
  "action": "compliment",
  "target": "agent_06",
  "gossip_target": null,
  "content": "I appreciate your willingness to engage in constructive
              dialogue.",
  "reasoning": "[not recorded]"
}"#;

    #[test]
    fn parses_trace_reply() {
        let d = parse_backend_reply(TURN_108, AgentId(18), 20).unwrap();
        assert_eq!(d.action, ActionType::Compliment);
        assert_eq!(d.target, AgentId(6));
        assert_eq!(d.gossip_target, None);
        assert!(d.content.starts_with("I appreciate"));
    }

    #[test]
    fn strips_fences_and_prose() {
        let raw = "Sure! ```json\n{\"action\": \"neutral\", \"target\": \"agent_13\", \"gossip_target\": null, \"content\": \"hi\", \"reasoning\": \"r\"}\n``` done";
        let d = parse_backend_reply(raw, AgentId(18), 20).unwrap();
        assert_eq!(d.action, ActionType::Neutral);
        assert_eq!(d.target, AgentId(13));
    }

    #[test]
    fn unknown_action_is_a_schema_violation() {
        let raw = r#"{"action": "befriend", "target": "agent_01", "gossip_target": null}"#;
        match parse_backend_reply(raw, AgentId(0), 20) {
            Err(ParseError::SchemaViolation(detail)) => assert!(detail.contains("unknown action")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_is_malformed() {
        assert_eq!(
            parse_backend_reply("no json here", AgentId(0), 20),
            Err(ParseError::Malformed)
        );
        assert_eq!(
            parse_backend_reply("{\"action\": ", AgentId(0), 20),
            Err(ParseError::Malformed)
        );
    }

    #[test]
    fn rule_violations_are_reported() {
        let raw = r#"{"action": "gossip", "target": "agent_01", "gossip_target": "agent_01"}"#;
        match parse_backend_reply(raw, AgentId(0), 20) {
            Err(ParseError::SchemaViolation(d)) => {
                assert!(d.contains("gossip_target must differ from target"))
            }
            other => panic!("unexpected {other:?}"),
        }
        let raw = r#"{"action": "neutral", "target": "agent_25"}"#;
        assert!(matches!(
            parse_backend_reply(raw, AgentId(0), 20),
            Err(ParseError::SchemaViolation(_))
        ));
    }

    #[test]
    fn reply_text_extraction() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#;
        assert_eq!(extract_reply_text(body), "hello");
        assert_eq!(extract_reply_text("plain"), "plain");
    }

    #[test]
    fn rendered_decision_parses_back() {
        let d = ActionDecision {
            action: ActionType::Gossip,
            target: AgentId(3),
            gossip_target: Some(AgentId(7)),
            content: "Did you hear \"that\"?".into(),
            reasoning: "line\nbreak".into(),
        };
        assert_eq!(
            parse_backend_reply(&render_decision(&d), AgentId(0), 20).unwrap(),
            d
        );
    }
}
