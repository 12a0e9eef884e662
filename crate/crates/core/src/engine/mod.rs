//! The turn loop.
//!
//! Each turn runs, in order: select actor, select partner, assemble the
//! context, ask the policy, validate, enforce the budget, apply the trust
//! update, log the record, and refresh memory when due.
//!
//! All randomness comes from named substreams of the run seed, so the
//! schedule (actor and partner draws) does not depend on what the policy
//! does with its own stream.

mod budget;
mod context;
mod memory;
mod trust;

pub use budget::{enforce_budget, BudgetLedger, BudgetState};
pub use context::{
    assemble_context, render_user_message, ContextView, LabelPresentation, TrustEntry,
};
pub use memory::{Direction, MemoryEvent, MemoryState, EMPTY_MEMORY};
pub use trust::{apply_action, ActionFault, ActionOutcome};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{
    group_of, validate_decision, ActionDecision, ActionType, ActorSchedule, AgentId, ConfigError,
    RunLog, SimulationConfig, TrustMatrix, TurnRecord,
};
use crate::policies::Policy;
use crate::streams::{stream, StreamRng};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
}

pub fn select_actor<R: Rng + ?Sized>(
    rng: &mut R,
    config: &SimulationConfig,
    turn: usize,
) -> AgentId {
    match config.actor_schedule {
        ActorSchedule::UniformRandom => AgentId(rng.random_range(0..config.n_agents)),
        ActorSchedule::RoundRobin => AgentId(turn % config.n_agents),
    }
}

/// Uniform over the `n - 1` agents other than `actor`.
pub fn select_partner<R: Rng + ?Sized>(rng: &mut R, actor: AgentId, n: usize) -> AgentId {
    assert!(n >= 2, "need at least two agents");
    let draw = rng.random_range(0..n - 1);
    AgentId(if draw >= actor.0 { draw + 1 } else { draw })
}

/// Seeded permutation of the personality pool over agents. Pools shorter
/// than the agent count wrap around.
pub fn assign_personalities(config: &SimulationConfig) -> Vec<String> {
    let mut rng = stream(config.seed, &[&config.streams.personality]);
    let mut order: Vec<usize> = (0..config.personality_pool.len()).collect();
    order.shuffle(&mut rng);
    (0..config.n_agents)
        .map(|i| config.personality_pool[order[i % order.len()]].clone())
        .collect()
}

/// The three per-run streams used by the loop. The condition is part of the
/// stream path, so runs of different conditions under the same seed draw
/// independent schedules.
pub struct RunStreams {
    pub scheduler: StreamRng,
    pub partner: StreamRng,
    pub policy: StreamRng,
}

impl RunStreams {
    pub fn new(config: &SimulationConfig) -> Self {
        let cond = config.condition.as_str();
        let s = &config.streams;
        RunStreams {
            scheduler: stream(config.seed, &[cond, &s.scheduler]),
            partner: stream(config.seed, &[cond, &s.partner]),
            policy: stream(config.seed, &[cond, &s.policy]),
        }
    }
}

/// Mutable state of one run.
pub struct Simulation<'a> {
    config: &'a SimulationConfig,
    trust: TrustMatrix,
    personalities: Vec<String>,
    memory: MemoryState,
    ledger: BudgetLedger,
    streams: RunStreams,
    records: Vec<TurnRecord>,
    turn: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a SimulationConfig) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(Simulation {
            config,
            trust: TrustMatrix::new(config.n_agents),
            personalities: assign_personalities(config),
            memory: MemoryState::new(config.n_agents, config.memory_interval),
            ledger: BudgetLedger::for_config(config),
            streams: RunStreams::new(config),
            records: Vec::with_capacity(config.n_turns),
            turn: 0,
        })
    }

    pub fn trust(&self) -> &TrustMatrix {
        &self.trust
    }

    pub fn records(&self) -> &[TurnRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.turn >= self.config.n_turns
    }

    /// Runs one turn. Turns are numbered from 1.
    pub fn step(&mut self, policy: &mut dyn Policy) -> &TurnRecord {
        self.turn += 1;
        let turn = self.turn;
        let config = self.config;
        let n = config.n_agents;

        let actor = select_actor(&mut self.streams.scheduler, config, turn);
        let target = select_partner(&mut self.streams.partner, actor, n);
        let view = assemble_context(
            &self.trust,
            config,
            actor,
            target,
            &self.personalities[actor.0],
            self.memory.summary(actor),
            self.ledger.remaining(actor),
        );

        let (decision, policy_error) = match policy.decide(&view, &mut self.streams.policy) {
            Ok(d) if d.target == target && validate_decision(&d, actor, n).is_empty() => (d, false),
            Ok(_) | Err(_) => (ActionDecision::new(ActionType::Neutral, target), true),
        };

        let (executed, overridden) =
            enforce_budget(&mut self.ledger, config, actor, decision.action);
        let executed_decision = ActionDecision {
            action: executed,
            target,
            gossip_target: if executed == ActionType::Gossip {
                decision.gossip_target
            } else {
                None
            },
            content: String::new(),
            reasoning: String::new(),
        };
        let outcome = apply_action(&mut self.trust, config, actor, &executed_decision)
            .expect("engine only applies validated decisions");

        self.records.push(TurnRecord {
            turn,
            actor,
            actor_group: group_of(actor),
            target,
            target_group: group_of(target),
            intended: decision.action,
            executed,
            budget_overridden: overridden,
            gossip_target: executed_decision.gossip_target,
            alliance_accepted: outcome.alliance_accepted,
            policy_error,
            reasoning: decision.reasoning,
            deltas_applied: outcome.deltas,
        });
        self.memory.record(turn, actor, target, executed);
        self.memory.refresh_if_due(turn);
        self.records.last().expect("just pushed")
    }

    pub fn finish(self) -> RunLog {
        RunLog {
            config: self.config.clone(),
            records: self.records,
            final_trust: self.trust,
        }
    }
}

/// Runs a full simulation with the given policy.
pub fn run_simulation(
    config: &SimulationConfig,
    policy: &mut dyn Policy,
) -> Result<RunLog, EngineError> {
    let mut sim = Simulation::new(config)?;
    while !sim.is_finished() {
        sim.step(policy);
    }
    Ok(sim.finish())
}
