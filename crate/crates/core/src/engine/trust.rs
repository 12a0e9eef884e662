use thiserror::Error;

use crate::model::{
    apply_deltas, validate_decision, ActionDecision, ActionType, AgentId, AppliedDelta,
    SimulationConfig, TrustMatrix, Violation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid decision reached apply_action: {violations:?}")]
pub struct ActionFault {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionOutcome {
    pub deltas: Vec<AppliedDelta>,
    /// Set for alliance offers only.
    pub alliance_accepted: Option<bool>,
}

/// Applies an executed action to the trust matrix.
///
/// `compliment`, `cooperate` and accepted `alliance_offer` move both
/// directions of the pair; `criticize` lowers both; `gossip` lowers the
/// actor's trust in the target and the target's trust in the gossip subject.
/// The target-side half is skipped when `target_side_updates` is off.
pub fn apply_action(
    trust: &mut TrustMatrix,
    config: &SimulationConfig,
    actor: AgentId,
    decision: &ActionDecision,
) -> Result<ActionOutcome, ActionFault> {
    let violations = validate_decision(decision, actor, trust.n());
    if !violations.is_empty() {
        return Err(ActionFault { violations });
    }
    let target = decision.target;
    let delta = config.deltas.get(decision.action);
    let reciprocal = config.target_side_updates;
    let mut deltas = Vec::with_capacity(2);
    let mut alliance_accepted = None;

    let mut push = |from: AgentId, to: AgentId, d: f64| {
        deltas.push(AppliedDelta { from, to, delta: d });
    };
    match decision.action {
        ActionType::Compliment | ActionType::Cooperate | ActionType::Criticize => {
            push(actor, target, delta);
            if reciprocal {
                push(target, actor, delta);
            }
        }
        ActionType::Neutral => {
            if delta != 0.0 {
                push(actor, target, delta);
            }
        }
        ActionType::Gossip => {
            let subject = decision
                .gossip_target
                .expect("validated gossip has a subject");
            push(actor, target, delta);
            push(target, subject, delta);
        }
        ActionType::AllianceOffer => {
            let accepted = trust.get(target.0, actor.0) > config.alliance_threshold;
            alliance_accepted = Some(accepted);
            if accepted {
                push(actor, target, delta);
                if reciprocal {
                    push(target, actor, delta);
                }
            }
        }
    }
    apply_deltas(trust, &deltas);
    Ok(ActionOutcome {
        deltas,
        alliance_accepted,
    })
}
