use super::{Policy, PolicyError, PolicyRng};
use crate::engine::ContextView;
use crate::model::{ActionDecision, RunLog, TurnRecord};

/// Re-issues the intended decisions of a recorded run, turn by turn.
///
/// Re-simulating a log under its own config with this policy reproduces
/// the log, including budget overrides and policy-error fallbacks.
#[derive(Debug, Clone)]
pub struct ReplayPolicy {
    records: Vec<TurnRecord>,
    next: usize,
}

impl ReplayPolicy {
    pub fn new(log: &RunLog) -> Self {
        ReplayPolicy {
            records: log.records.clone(),
            next: 0,
        }
    }
}

impl Policy for ReplayPolicy {
    fn decide(
        &mut self,
        ctx: &ContextView,
        _rng: &mut PolicyRng,
    ) -> Result<ActionDecision, PolicyError> {
        let rec = self
            .records
            .get(self.next)
            .ok_or_else(|| PolicyError::Replay("log exhausted".into()))?;
        self.next += 1;
        if rec.actor != ctx.actor || rec.target != ctx.target {
            return Err(PolicyError::Replay(format!(
                "turn {} expected {} -> {}, engine scheduled {} -> {}",
                rec.turn, rec.actor, rec.target, ctx.actor, ctx.target
            )));
        }
        if rec.policy_error {
            return Err(PolicyError::Replay(format!(
                "turn {} recorded a policy error",
                rec.turn
            )));
        }
        Ok(ActionDecision {
            action: rec.intended,
            target: rec.target,
            gossip_target: rec.gossip_target,
            content: String::new(),
            reasoning: rec.reasoning.clone(),
        })
    }
}
