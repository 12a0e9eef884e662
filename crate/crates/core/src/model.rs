//! Domain types shared by the engine, the policies and the analysis code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an agent within a run, rendered as `agent_NN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }

    /// Parses `agent_06`, `agent_6` or a bare index.
    pub fn parse(text: &str) -> Option<AgentId> {
        let text = text.trim();
        let digits = text.strip_prefix("agent_").unwrap_or(text);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(AgentId)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent_{:02}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroupLabel {
    Kappa,
    Tilon,
}

impl GroupLabel {
    pub fn other(self) -> GroupLabel {
        match self {
            GroupLabel::Kappa => GroupLabel::Tilon,
            GroupLabel::Tilon => GroupLabel::Kappa,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupLabel::Kappa => "Kappa",
            GroupLabel::Tilon => "Tilon",
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Even indices are Kappa, odd indices are Tilon.
pub fn group_of(agent: AgentId) -> GroupLabel {
    if agent.0.is_multiple_of(2) {
        GroupLabel::Kappa
    } else {
        GroupLabel::Tilon
    }
}

/// Group labels for agents `0..n` in index order.
pub fn labels_for(n: usize) -> Vec<GroupLabel> {
    (0..n).map(|i| group_of(AgentId(i))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Compliment,
    Cooperate,
    Neutral,
    Gossip,
    Criticize,
    AllianceOffer,
}

impl ActionType {
    pub const ALL: [ActionType; 6] = [
        ActionType::Compliment,
        ActionType::Cooperate,
        ActionType::Neutral,
        ActionType::Gossip,
        ActionType::Criticize,
        ActionType::AllianceOffer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionType::Compliment => "compliment",
            ActionType::Cooperate => "cooperate",
            ActionType::Neutral => "neutral",
            ActionType::Gossip => "gossip",
            ActionType::Criticize => "criticize",
            ActionType::AllianceOffer => "alliance_offer",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_prosocial(self) -> bool {
        matches!(
            self,
            ActionType::Compliment | ActionType::Cooperate | ActionType::AllianceOffer
        )
    }

    pub fn is_antisocial(self) -> bool {
        matches!(self, ActionType::Gossip | ActionType::Criticize)
    }

    /// Actions that consume the cooperation budget.
    pub fn is_high_value(self) -> bool {
        matches!(self, ActionType::Cooperate | ActionType::AllianceOffer)
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown action `{0}`")]
pub struct UnknownAction(pub String);

impl FromStr for ActionType {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ActionType::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownAction(s.to_string()))
    }
}

/// Experimental condition.
///
/// * `A`: labels assigned but hidden (the actor's own label is an internal tag only)
/// * `B`: labels visible in the header and the trust list
/// * `C`: as `B`, plus the cooperation budget
/// * `D`: labels visible in the header only
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    C,
    D,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::A, Condition::B, Condition::C, Condition::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::A => "A",
            Condition::B => "B",
            Condition::C => "C",
            Condition::D => "D",
        }
    }

    pub fn header_labels_visible(self) -> bool {
        !matches!(self, Condition::A)
    }

    pub fn list_labels_visible(self) -> bool {
        matches!(self, Condition::B | Condition::C)
    }

    pub fn has_budget(self) -> bool {
        matches!(self, Condition::C)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Condition::A),
            "B" => Ok(Condition::B),
            "C" => Ok(Condition::C),
            "D" => Ok(Condition::D),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorSchedule {
    #[default]
    UniformRandom,
    RoundRobin,
}

/// How a pair qualifies as an edge of the trust graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// `(t_ij + t_ji) / 2 >= threshold`
    #[default]
    MutualMean,
    /// `t_ij >= threshold && t_ji >= threshold`
    BothDirections,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustError {
    #[error("trust matrix must be square, row {row} has {len} entries for n = {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("trust entry ({row}, {col}) = {value} is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
}

/// Directed trust `t[i][j]`: how much agent `i` trusts agent `j`.
///
/// Off-diagonal entries stay in `[0, 1]`. The diagonal is stored at 0.5 and
/// never read by any metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TrustMatrix {
    n: usize,
    values: Vec<f64>,
}

pub const INITIAL_TRUST: f64 = 0.5;

impl TrustMatrix {
    pub fn new(n: usize) -> Self {
        TrustMatrix {
            n,
            values: vec![INITIAL_TRUST; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TrustError> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(TrustError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                if i != j && !(0.0..=1.0).contains(&v) {
                    return Err(TrustError::OutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                values.push(v);
            }
        }
        Ok(TrustMatrix { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.values[from * self.n + to]
    }

    pub fn set(&mut self, from: usize, to: usize, value: f64) -> Result<(), TrustError> {
        if from != to && !(0.0..=1.0).contains(&value) {
            return Err(TrustError::OutOfRange {
                row: from,
                col: to,
                value,
            });
        }
        self.values[from * self.n + to] = value;
        Ok(())
    }

    /// Adds `delta` to `t[from][to]`, saturating at the bounds.
    pub fn add_clamped(&mut self, from: usize, to: usize, delta: f64) {
        let cell = &mut self.values[from * self.n + to];
        *cell = (*cell + delta).clamp(0.0, 1.0);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for TrustMatrix {
    type Error = TrustError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        TrustMatrix::from_rows(rows)
    }
}

impl From<TrustMatrix> for Vec<Vec<f64>> {
    fn from(m: TrustMatrix) -> Self {
        m.to_rows()
    }
}

/// Actor-side trust delta per action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDeltas {
    pub compliment: f64,
    pub cooperate: f64,
    pub neutral: f64,
    pub gossip: f64,
    pub criticize: f64,
    pub alliance_offer: f64,
}

impl Default for ActionDeltas {
    fn default() -> Self {
        ActionDeltas {
            compliment: 0.15,
            cooperate: 0.20,
            neutral: 0.0,
            gossip: -0.05,
            criticize: -0.15,
            alliance_offer: 0.10,
        }
    }
}

impl ActionDeltas {
    pub fn get(&self, action: ActionType) -> f64 {
        match action {
            ActionType::Compliment => self.compliment,
            ActionType::Cooperate => self.cooperate,
            ActionType::Neutral => self.neutral,
            ActionType::Gossip => self.gossip,
            ActionType::Criticize => self.criticize,
            ActionType::AllianceOffer => self.alliance_offer,
        }
    }
}

/// Names of the independent random streams derived from the run seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StreamNames {
    pub scheduler: String,
    pub partner: String,
    pub policy: String,
    pub personality: String,
}

impl Default for StreamNames {
    fn default() -> Self {
        StreamNames {
            scheduler: "scheduler".into(),
            partner: "partner".into(),
            policy: "policy".into(),
            personality: "personality".into(),
        }
    }
}

/// Placeholder trait phrases. Two of them appear in published traces; the
/// rest are neutral stand-ins.
pub const DEFAULT_PERSONALITIES: [&str; 20] = [
    "diplomatic and fair",
    "ambitious and competitive",
    "curious and open-minded",
    "cautious and reserved",
    "warm and talkative",
    "pragmatic and direct",
    "patient and thoughtful",
    "playful and witty",
    "loyal and steady",
    "independent and blunt",
    "generous and trusting",
    "skeptical and analytical",
    "calm and easygoing",
    "energetic and bold",
    "modest and quiet",
    "principled and strict",
    "charming and sociable",
    "practical and efficient",
    "creative and spontaneous",
    "observant and measured",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_agents: usize,
    pub n_turns: usize,
    pub condition: Condition,
    pub seed: u64,
    pub deltas: ActionDeltas,
    pub alliance_threshold: f64,
    pub edge_threshold: f64,
    pub edge_rule: EdgeRule,
    pub budget_allowance: u32,
    pub budget_window: u32,
    pub actor_schedule: ActorSchedule,
    pub memory_interval: usize,
    pub personality_pool: Vec<String>,
    /// Apply the reciprocal (target-side) trust update.
    pub target_side_updates: bool,
    pub streams: StreamNames,
    /// Free-form description of the policy that produced the run.
    pub policy_label: String,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_agents: 20,
            n_turns: 500,
            condition: Condition::B,
            seed: 0,
            deltas: ActionDeltas::default(),
            alliance_threshold: 0.55,
            edge_threshold: 0.6,
            edge_rule: EdgeRule::MutualMean,
            budget_allowance: 2,
            budget_window: 10,
            actor_schedule: ActorSchedule::UniformRandom,
            memory_interval: 20,
            personality_pool: DEFAULT_PERSONALITIES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            target_side_updates: true,
            streams: StreamNames::default(),
            policy_label: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("n_agents must be even and at least 4, got {0}")]
    AgentCount(usize),
    #[error("budget_allowance and budget_window must be positive")]
    Budget,
    #[error("budget_allowance ({allowance}) exceeds budget_window ({window})")]
    AllowanceExceedsWindow { allowance: u32, window: u32 },
    #[error("memory_interval must be positive")]
    MemoryInterval,
    #[error("personality_pool is empty")]
    EmptyPersonalityPool,
    #[error("threshold `{name}` = {value} is outside [0, 1]")]
    Threshold { name: &'static str, value: f64 },
}

impl SimulationConfig {
    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_agents < 4 || !self.n_agents.is_multiple_of(2) {
            return Err(ConfigError::AgentCount(self.n_agents));
        }
        if self.budget_allowance == 0 || self.budget_window == 0 {
            return Err(ConfigError::Budget);
        }
        if self.budget_allowance > self.budget_window {
            return Err(ConfigError::AllowanceExceedsWindow {
                allowance: self.budget_allowance,
                window: self.budget_window,
            });
        }
        if self.memory_interval == 0 {
            return Err(ConfigError::MemoryInterval);
        }
        if self.personality_pool.is_empty() {
            return Err(ConfigError::EmptyPersonalityPool);
        }
        for (name, value) in [
            ("alliance_threshold", self.alliance_threshold),
            ("edge_threshold", self.edge_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Threshold { name, value });
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<GroupLabel> {
        labels_for(self.n_agents)
    }
}

/// What a policy wants to do this turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub action: ActionType,
    pub target: AgentId,
    pub gossip_target: Option<AgentId>,
    pub content: String,
    pub reasoning: String,
}

impl ActionDecision {
    pub fn new(action: ActionType, target: AgentId) -> Self {
        ActionDecision {
            action,
            target,
            gossip_target: None,
            content: String::new(),
            reasoning: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
    #[error("target must differ from the acting agent")]
    TargetIsActor,
    #[error("gossip requires a gossip_target")]
    MissingGossipTarget,
    #[error("gossip_target is only allowed when action is gossip")]
    UnexpectedGossipTarget,
    #[error("gossip_target must differ from target")]
    GossipTargetIsTarget,
    #[error("gossip_target must differ from the acting agent")]
    GossipTargetIsActor,
}

/// Checks a decision against the reply rules. An empty list means valid.
pub fn validate_decision(d: &ActionDecision, actor: AgentId, n: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.target.0 >= n {
        out.push(Violation::UnknownAgent(d.target));
    }
    if d.target == actor {
        out.push(Violation::TargetIsActor);
    }
    match (d.action, d.gossip_target) {
        (ActionType::Gossip, None) => out.push(Violation::MissingGossipTarget),
        (ActionType::Gossip, Some(g)) => {
            if g.0 >= n {
                out.push(Violation::UnknownAgent(g));
            }
            if g == d.target {
                out.push(Violation::GossipTargetIsTarget);
            }
            if g == actor {
                out.push(Violation::GossipTargetIsActor);
            }
        }
        (_, Some(_)) => out.push(Violation::UnexpectedGossipTarget),
        (_, None) => {}
    }
    out
}

/// One directed trust change, as nominally applied (before clamping).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedDelta {
    pub from: AgentId,
    pub to: AgentId,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub actor: AgentId,
    pub actor_group: GroupLabel,
    pub target: AgentId,
    pub target_group: GroupLabel,
    pub intended: ActionType,
    pub executed: ActionType,
    pub budget_overridden: bool,
    pub gossip_target: Option<AgentId>,
    /// `Some(accepted)` for executed alliance offers.
    pub alliance_accepted: Option<bool>,
    /// The policy failed and the turn fell back to `neutral`.
    pub policy_error: bool,
    pub reasoning: String,
    pub deltas_applied: Vec<AppliedDelta>,
}

impl TurnRecord {
    pub fn is_in_group(&self) -> bool {
        self.actor_group == self.target_group
    }

    /// The actor-to-target entry of `deltas_applied`, zero when absent.
    pub fn actor_to_target_delta(&self) -> f64 {
        self.deltas_applied
            .iter()
            .filter(|d| d.from == self.actor && d.to == self.target)
            .map(|d| d.delta)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: SimulationConfig,
    pub records: Vec<TurnRecord>,
    pub final_trust: TrustMatrix,
}

impl RunLog {
    /// Folds the logged deltas over a fresh matrix.
    pub fn replay(&self) -> TrustMatrix {
        self.replay_until(self.records.len())
    }

    /// Trust state after the first `turns` records.
    pub fn replay_until(&self, turns: usize) -> TrustMatrix {
        let mut trust = TrustMatrix::new(self.config.n_agents);
        for rec in &self.records[..turns.min(self.records.len())] {
            apply_deltas(&mut trust, &rec.deltas_applied);
        }
        trust
    }

    pub fn is_replay_consistent(&self) -> bool {
        self.records.len() == self.config.n_turns && self.replay() == self.final_trust
    }
}

pub(crate) fn apply_deltas(trust: &mut TrustMatrix, deltas: &[AppliedDelta]) {
    for d in deltas {
        trust.add_clamped(d.from.0, d.to.0, d.delta);
    }
}
