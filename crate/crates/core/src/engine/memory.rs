use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{ActionType, AgentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// The agent was the target.
    In,
    /// The agent acted.
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryEvent {
    pub turn: usize,
    pub counterpart: AgentId,
    pub action: ActionType,
    pub direction: Direction,
}

pub const EMPTY_MEMORY: &str = "No prior interactions.";

#[derive(Debug, Clone, Default)]
struct AgentMemory {
    recent: VecDeque<MemoryEvent>,
    summary: Option<String>,
}

/// Rolling per-agent memory. The summary is a deterministic digest of the
/// executed actions seen in the last `interval` turns and is rebuilt only
/// when `turn % interval == 0`.
#[derive(Debug, Clone)]
pub struct MemoryState {
    interval: usize,
    agents: Vec<AgentMemory>,
}

impl MemoryState {
    pub fn new(n_agents: usize, interval: usize) -> Self {
        MemoryState {
            interval,
            agents: vec![AgentMemory::default(); n_agents],
        }
    }

    pub fn record(&mut self, turn: usize, actor: AgentId, target: AgentId, executed: ActionType) {
        self.agents[actor.0].recent.push_back(MemoryEvent {
            turn,
            counterpart: target,
            action: executed,
            direction: Direction::Out,
        });
        self.agents[target.0].recent.push_back(MemoryEvent {
            turn,
            counterpart: actor,
            action: executed,
            direction: Direction::In,
        });
    }

    /// Returns true when the summaries were regenerated.
    pub fn refresh_if_due(&mut self, turn: usize) -> bool {
        if turn == 0 || !turn.is_multiple_of(self.interval) {
            return false;
        }
        let oldest = turn.saturating_sub(self.interval);
        for mem in &mut self.agents {
            while mem.recent.front().is_some_and(|e| e.turn <= oldest) {
                mem.recent.pop_front();
            }
            mem.summary = Some(digest(&mem.recent, self.interval));
        }
        true
    }

    pub fn summary(&self, agent: AgentId) -> &str {
        self.agents[agent.0]
            .summary
            .as_deref()
            .unwrap_or(EMPTY_MEMORY)
    }

    pub fn recent(&self, agent: AgentId) -> impl Iterator<Item = &MemoryEvent> {
        self.agents[agent.0].recent.iter()
    }
}

fn digest(events: &VecDeque<MemoryEvent>, interval: usize) -> String {
    if events.is_empty() {
        return format!("No interactions in the last {interval} turns.");
    }
    // counterpart -> (sent counts, received counts) indexed by action
    let mut counts: BTreeMap<AgentId, ([u32; 6], [u32; 6])> = BTreeMap::new();
    for e in events {
        let entry = counts.entry(e.counterpart).or_default();
        match e.direction {
            Direction::Out => entry.0[e.action.index()] += 1,
            Direction::In => entry.1[e.action.index()] += 1,
        }
    }
    let mut out = format!("Last {interval} turns:");
    for (peer, (sent, received)) in counts {
        let _ = write!(out, "\n  {peer}:");
        for (verb, tally) in [("you sent", sent), ("you received", received)] {
            let parts: Vec<String> = ActionType::ALL
                .iter()
                .filter(|a| tally[a.index()] > 0)
                .map(|a| format!("{} x{}", a, tally[a.index()]))
                .collect();
            if !parts.is_empty() {
                let _ = write!(out, " {verb} {};", parts.join(", "));
            }
        }
    }
    out
}
