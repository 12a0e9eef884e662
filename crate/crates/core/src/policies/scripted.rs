use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Policy, PolicyError, PolicyRng};
use crate::engine::ContextView;
use crate::model::{ActionDecision, ActionType, AgentId};

const RATE_TOLERANCE: f64 = 1e-9;

/// A probability vector over the six actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<ActionType, f64>",
    into = "BTreeMap<ActionType, f64>"
)]
pub struct ActionRates([f64; 6]);

impl ActionRates {
    pub fn only(action: ActionType) -> Self {
        let mut r = [0.0; 6];
        r[action.index()] = 1.0;
        ActionRates(r)
    }

    pub fn from_pairs(pairs: &[(ActionType, f64)]) -> Result<Self, ParamsError> {
        let mut r = [0.0; 6];
        for (a, p) in pairs {
            r[a.index()] += p;
        }
        ActionRates::try_from_array(r)
    }

    fn try_from_array(r: [f64; 6]) -> Result<Self, ParamsError> {
        if r.iter().any(|p| !p.is_finite() || *p < -RATE_TOLERANCE) {
            return Err(ParamsError::NegativeRate);
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ParamsError::NotNormalized(sum));
        }
        Ok(ActionRates(r.map(|p| p.max(0.0))))
    }

    pub fn get(&self, action: ActionType) -> f64 {
        self.0[action.index()]
    }

    /// Inverse-CDF sample from one uniform draw in `[0, 1)`.
    pub fn sample(&self, u: f64) -> ActionType {
        let mut acc = 0.0;
        let mut last = ActionType::Neutral;
        for a in ActionType::ALL {
            let p = self.0[a.index()];
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = a;
            if u < acc {
                return a;
            }
        }
        last
    }

    fn shifted(&self, favored: ActionType, shift: f64) -> Result<Self, ParamsError> {
        let mut r = self.0;
        r[favored.index()] += shift;
        r[ActionType::Neutral.index()] -= shift;
        if r.iter()
            .any(|p| *p < -RATE_TOLERANCE || *p > 1.0 + RATE_TOLERANCE)
        {
            return Err(ParamsError::ShiftOutOfRange(shift * 200.0));
        }
        Ok(ActionRates(r.map(|p| p.clamp(0.0, 1.0))))
    }
}

impl Default for ActionRates {
    fn default() -> Self {
        ActionRates::from_pairs(&[(ActionType::Compliment, 0.5), (ActionType::Neutral, 0.5)])
            .expect("valid default")
    }
}

impl TryFrom<BTreeMap<ActionType, f64>> for ActionRates {
    type Error = ParamsError;

    fn try_from(map: BTreeMap<ActionType, f64>) -> Result<Self, Self::Error> {
        let pairs: Vec<_> = map.into_iter().collect();
        ActionRates::from_pairs(&pairs)
    }
}

impl From<ActionRates> for BTreeMap<ActionType, f64> {
    fn from(r: ActionRates) -> Self {
        ActionType::ALL
            .into_iter()
            .filter(|a| r.get(*a) > 0.0)
            .map(|a| (a, r.get(a)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("action rates must be non-negative and finite")]
    NegativeRate,
    #[error("action rates sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("targeting differential of {0} pp pushes a rate outside [0, 1]")]
    ShiftOutOfRange(f64),
    #[error("favored channel cannot be neutral")]
    NeutralFavored,
    #[error("mention rate {0} is outside [0, 1]")]
    MentionRate(f64),
}

/// Parameters of the group-contingent scripted agent.
///
/// `delta_pp` is the in-group minus out-group rate difference on the
/// favored channel, in percentage points. It is split symmetrically: the
/// in-group distribution moves `delta_pp / 200` from `neutral` to the
/// favored channel and the out-group distribution moves the same amount
/// back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScriptedParams {
    pub base_rates: ActionRates,
    pub delta_pp: f64,
    pub favored_channel: ActionType,
    /// Probability that the reasoning string names a group label on an
    /// in-group turn.
    pub mention_rate_in_group: f64,
    pub mention_rate_out_group: f64,
}

impl Default for ScriptedParams {
    fn default() -> Self {
        ScriptedParams {
            base_rates: ActionRates::default(),
            delta_pp: 0.0,
            favored_channel: ActionType::Compliment,
            mention_rate_in_group: 0.0,
            mention_rate_out_group: 0.0,
        }
    }
}

impl ScriptedParams {
    pub fn with_delta(delta_pp: f64) -> Self {
        ScriptedParams {
            delta_pp,
            ..ScriptedParams::default()
        }
    }

    /// In-group and out-group distributions.
    pub fn group_rates(&self) -> Result<(ActionRates, ActionRates), ParamsError> {
        if self.favored_channel == ActionType::Neutral && self.delta_pp != 0.0 {
            return Err(ParamsError::NeutralFavored);
        }
        for rate in [self.mention_rate_in_group, self.mention_rate_out_group] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(ParamsError::MentionRate(rate));
            }
        }
        let half = self.delta_pp / 200.0;
        Ok((
            self.base_rates.shifted(self.favored_channel, half)?,
            self.base_rates.shifted(self.favored_channel, -half)?,
        ))
    }
}

/// Parametric agent. It conditions only on whether the target is visibly
/// in-group; with hidden labels it samples from the base rates.
///
/// Each decision consumes exactly three uniforms (action, label mention,
/// gossip subject) so runs that differ only in parameters stay aligned
/// draw-for-draw.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    blind: ActionRates,
    in_group: ActionRates,
    out_group: ActionRates,
    mention_in: f64,
    mention_out: f64,
}

impl ScriptedPolicy {
    pub fn new(params: ScriptedParams) -> Result<Self, ParamsError> {
        let (in_group, out_group) = params.group_rates()?;
        Ok(ScriptedPolicy {
            blind: params.base_rates,
            in_group,
            out_group,
            mention_in: params.mention_rate_in_group,
            mention_out: params.mention_rate_out_group,
        })
    }

    /// Explicit per-stratum distributions.
    pub fn from_group_rates(
        blind: ActionRates,
        in_group: ActionRates,
        out_group: ActionRates,
    ) -> Self {
        ScriptedPolicy {
            blind,
            in_group,
            out_group,
            mention_in: 0.0,
            mention_out: 0.0,
        }
    }

    pub fn with_mentions(mut self, in_group: f64, out_group: f64) -> Self {
        self.mention_in = in_group;
        self.mention_out = out_group;
        self
    }

    pub fn rates_for(&self, target_in_group: Option<bool>) -> &ActionRates {
        match target_in_group {
            Some(true) => &self.in_group,
            Some(false) => &self.out_group,
            None => &self.blind,
        }
    }
}

/// Decision for a given context and three uniforms; pure so it can be tested
/// without a stream.
fn scripted_decide(policy: &ScriptedPolicy, ctx: &ContextView, draws: [f64; 3]) -> ActionDecision {
    let status = ctx.target_in_group();
    let action = policy.rates_for(status).sample(draws[0]);
    let gossip_target = (action == ActionType::Gossip).then(|| {
        let n = ctx.n_agents();
        let candidates: Vec<usize> = (0..n)
            .filter(|&j| j != ctx.actor.0 && j != ctx.target.0)
            .collect();
        let k = ((draws[2] * candidates.len() as f64) as usize).min(candidates.len() - 1);
        AgentId(candidates[k])
    });
    let mention_rate = match status {
        Some(true) => policy.mention_in,
        Some(false) => policy.mention_out,
        None => 0.0,
    };
    let reasoning = match ctx.target_label {
        Some(label) if draws[1] < mention_rate => {
            format!(
                "{} is in group {}, so I choose {}.",
                ctx.target, label, action
            )
        }
        _ => format!("I choose {} toward {}.", action, ctx.target),
    };
    ActionDecision {
        action,
        target: ctx.target,
        gossip_target,
        content: format!("Hello {}, this is {}.", ctx.target, ctx.actor),
        reasoning,
    }
}

impl Policy for ScriptedPolicy {
    fn decide(
        &mut self,
        ctx: &ContextView,
        rng: &mut PolicyRng,
    ) -> Result<ActionDecision, PolicyError> {
        let draws = [
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
        ];
        Ok(scripted_decide(self, ctx, draws))
    }
}
