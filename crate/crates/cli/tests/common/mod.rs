#![allow(dead_code)]

use mgsim_core::model::{ActionType, Condition, RunLog, SimulationConfig};
use mgsim_core::policies::{ActionRates, ScriptedParams};
use mgsim_core::{run_simulation, ScriptedPolicy};

use ActionType::*;

/// Six scripted stand-ins with different action mixes, each with the
/// channel that carries its targeting differential.
pub fn analogues() -> Vec<(&'static str, ActionRates, ActionType)> {
    let r = |pairs: &[(ActionType, f64)]| ActionRates::from_pairs(pairs).unwrap();
    vec![
        ("m1", r(&[(Compliment, 0.5), (Neutral, 0.5)]), Compliment),
        (
            "m2",
            r(&[(Compliment, 0.4), (Cooperate, 0.2), (Neutral, 0.4)]),
            Compliment,
        ),
        (
            "m3",
            r(&[
                (Compliment, 0.3),
                (Cooperate, 0.3),
                (Neutral, 0.3),
                (AllianceOffer, 0.1),
            ]),
            Cooperate,
        ),
        (
            "m4",
            r(&[
                (Compliment, 0.35),
                (Neutral, 0.45),
                (Gossip, 0.1),
                (Criticize, 0.1),
            ]),
            Compliment,
        ),
        ("m5", r(&[(Cooperate, 0.5), (Neutral, 0.5)]), Cooperate),
        (
            "m6",
            r(&[
                (Compliment, 0.25),
                (Cooperate, 0.25),
                (Neutral, 0.4),
                (AllianceOffer, 0.05),
                (Gossip, 0.05),
            ]),
            Compliment,
        ),
    ]
}

pub fn params(rates: ActionRates, channel: ActionType, delta_pp: f64) -> ScriptedParams {
    ScriptedParams {
        base_rates: rates,
        delta_pp,
        favored_channel: channel,
        ..ScriptedParams::default()
    }
}

pub fn simulate(condition: Condition, seed: u64, params: &ScriptedParams) -> RunLog {
    let config = SimulationConfig {
        condition,
        seed,
        ..SimulationConfig::default()
    };
    let mut p = ScriptedPolicy::new(params.clone()).unwrap();
    run_simulation(&config, &mut p).unwrap()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
