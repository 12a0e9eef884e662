use serde::{Deserialize, Serialize};

use crate::model::{ActionType, AgentId, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetState {
    pub actor_turns_taken: u32,
    pub remaining_allowance: u32,
}

/// Per-agent cooperation budget over non-overlapping blocks of actor-turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetLedger {
    allowance: u32,
    window: u32,
    agents: Vec<BudgetState>,
}

impl BudgetLedger {
    pub fn new(n_agents: usize, allowance: u32, window: u32) -> Self {
        assert!(
            allowance > 0 && window > 0,
            "budget fields must be positive"
        );
        BudgetLedger {
            allowance,
            window,
            agents: vec![
                BudgetState {
                    actor_turns_taken: 0,
                    remaining_allowance: allowance,
                };
                n_agents
            ],
        }
    }

    pub fn for_config(config: &SimulationConfig) -> Self {
        BudgetLedger::new(
            config.n_agents,
            config.budget_allowance,
            config.budget_window,
        )
    }

    pub fn state(&self, agent: AgentId) -> BudgetState {
        self.agents[agent.0]
    }

    fn at_block_start(&self, agent: AgentId) -> bool {
        self.agents[agent.0].actor_turns_taken.is_multiple_of(self.window)
    }

    /// Allowance the agent holds on its upcoming actor-turn, counting a
    /// pending block reset.
    pub fn remaining(&self, agent: AgentId) -> u32 {
        if self.at_block_start(agent) {
            self.allowance
        } else {
            self.agents[agent.0].remaining_allowance
        }
    }

    /// Consumes one actor-turn. Returns the executed action and whether the
    /// intended one was overridden.
    pub fn spend(&mut self, agent: AgentId, intended: ActionType) -> (ActionType, bool) {
        if self.at_block_start(agent) {
            self.agents[agent.0].remaining_allowance = self.allowance;
        }
        let state = &mut self.agents[agent.0];
        state.actor_turns_taken += 1;
        if !intended.is_high_value() {
            return (intended, false);
        }
        if state.remaining_allowance == 0 {
            (ActionType::Neutral, true)
        } else {
            state.remaining_allowance -= 1;
            (intended, false)
        }
    }
}

/// Applies the budget in Condition C and passes the action through otherwise.
pub fn enforce_budget(
    ledger: &mut BudgetLedger,
    config: &SimulationConfig,
    actor: AgentId,
    intended: ActionType,
) -> (ActionType, bool) {
    if config.condition.has_budget() {
        ledger.spend(actor, intended)
    } else {
        (intended, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Condition;

    fn config_c() -> SimulationConfig {
        SimulationConfig::default().with_condition(Condition::C)
    }

    #[test]
    fn exhausted_allowance_overrides_high_value() {
        let cfg = config_c();
        let mut ledger = BudgetLedger::for_config(&cfg);
        let a = AgentId(0);
        assert_eq!(
            enforce_budget(&mut ledger, &cfg, a, ActionType::Cooperate),
            (ActionType::Cooperate, false)
        );
        assert_eq!(
            enforce_budget(&mut ledger, &cfg, a, ActionType::AllianceOffer),
            (ActionType::AllianceOffer, false)
        );
        assert_eq!(ledger.state(a).remaining_allowance, 0);
        assert_eq!(
            enforce_budget(&mut ledger, &cfg, a, ActionType::Cooperate),
            (ActionType::Neutral, true)
        );
    }

    #[test]
    fn non_budgeted_actions_keep_allowance() {
        let cfg = config_c();
        let mut ledger = BudgetLedger::for_config(&cfg);
        let a = AgentId(3);
        assert_eq!(ledger.remaining(a), 2);
        assert_eq!(
            enforce_budget(&mut ledger, &cfg, a, ActionType::Compliment),
            (ActionType::Compliment, false)
        );
        assert_eq!(ledger.remaining(a), 2);
        assert_eq!(ledger.state(a).actor_turns_taken, 1);
    }

    #[test]
    fn always_cooperate_gets_two_per_block() {
        let cfg = config_c();
        let mut ledger = BudgetLedger::for_config(&cfg);
        let a = AgentId(1);
        let outcomes: Vec<_> = (0..100)
            .map(|_| enforce_budget(&mut ledger, &cfg, a, ActionType::Cooperate))
            .collect();
        for block in outcomes.chunks(10) {
            let executed = block
                .iter()
                .filter(|(e, _)| *e == ActionType::Cooperate)
                .count();
            let overridden = block
                .iter()
                .filter(|(e, o)| *o && *e == ActionType::Neutral)
                .count();
            assert_eq!(executed, 2);
            assert_eq!(overridden, 8);
            assert!(!block[0].1 && !block[1].1);
        }
    }

    #[test]
    fn other_conditions_pass_through() {
        let cfg = SimulationConfig::default().with_condition(Condition::B);
        let mut ledger = BudgetLedger::for_config(&cfg);
        for _ in 0..30 {
            assert_eq!(
                enforce_budget(&mut ledger, &cfg, AgentId(0), ActionType::Cooperate),
                (ActionType::Cooperate, false)
            );
        }
    }

    #[test]
    fn remaining_shows_reset_at_block_start() {
        let mut ledger = BudgetLedger::new(4, 2, 3);
        let a = AgentId(2);
        ledger.spend(a, ActionType::Cooperate);
        ledger.spend(a, ActionType::Cooperate);
        ledger.spend(a, ActionType::Neutral);
        assert_eq!(ledger.state(a).remaining_allowance, 0);
        assert_eq!(ledger.remaining(a), 2);
    }
}
