//! Seeded Monte Carlo checks of the metrics against the scripted policy.

use mgsim_core::metrics::{
    action_homophily, bias_time_series, budget_attempt_bias, mean_adjacency,
    pooled_action_distribution,
};
use mgsim_core::model::{ActionType, Condition, RunLog, SimulationConfig};
use mgsim_core::policies::{ActionRates, ScriptedParams};
use mgsim_core::runio::{read_runlog_from, write_runlog_to};
use mgsim_core::textscan::extract_contrastive_pairs;
use mgsim_core::{run_simulation, ScriptedPolicy};

fn run(condition: Condition, seed: u64, turns: usize, params: ScriptedParams) -> RunLog {
    let config = SimulationConfig {
        condition,
        seed,
        n_turns: turns,
        ..SimulationConfig::default()
    };
    let mut p = ScriptedPolicy::new(params).unwrap();
    run_simulation(&config, &mut p).unwrap()
}

#[test]
fn homophily_positive_under_differential() {
    let positive = (0..20)
        .filter(|&s| {
            let log = run(Condition::B, s, 500, ScriptedParams::with_delta(10.0));
            action_homophily(&log).h.unwrap() > 0.0
        })
        .count();
    assert!(positive >= 19, "{positive}/20 seeds");
}

#[test]
fn bias_series_mostly_rises() {
    let series: Vec<Vec<(usize, f64)>> = (0..20)
        .map(|s| {
            bias_time_series(
                &run(Condition::B, s, 500, ScriptedParams::with_delta(10.0)),
                50,
            )
            .unwrap()
        })
        .collect();
    let points = series[0].len();
    assert_eq!(points, 11);
    let avg: Vec<f64> = (0..points)
        .map(|i| series.iter().map(|s| s[i].1).sum::<f64>() / 20.0)
        .collect();
    let rising = avg.windows(2).filter(|w| w[1] >= w[0]).count();
    assert!(rising as f64 >= 0.9 * (points - 1) as f64, "{avg:?}");
}

#[test]
fn distribution_recovers_differential() {
    let logs: Vec<RunLog> = (0..4)
        .map(|s| run(Condition::B, s, 10_000, ScriptedParams::with_delta(10.0)))
        .collect();
    let d = pooled_action_distribution(&logs)
        .share(ActionType::Compliment)
        .delta_pp
        .unwrap();
    assert!((d - 10.0).abs() <= 1.5, "{d}");

    let logs: Vec<RunLog> = (0..4)
        .map(|s| run(Condition::B, s, 10_000, ScriptedParams::with_delta(0.0)))
        .collect();
    let d = pooled_action_distribution(&logs)
        .share(ActionType::Compliment)
        .delta_pp
        .unwrap();
    assert!(d.abs() < 2.0, "{d}");
}

#[test]
fn budget_attempts_unbiased_for_blind_policy() {
    let params = ScriptedParams {
        base_rates: ActionRates::from_pairs(&[
            (ActionType::Cooperate, 0.5),
            (ActionType::Neutral, 0.5),
        ])
        .unwrap(),
        favored_channel: ActionType::Cooperate,
        ..ScriptedParams::default()
    };
    let reports: Vec<_> = (0..4)
        .map(|s| budget_attempt_bias(&run(Condition::C, s, 10_000, params.clone())))
        .collect();
    assert!(reports.iter().all(|r| r.n_enforced > 1000));
    let delta = reports
        .iter()
        .map(|r| r.delta_attempt.unwrap())
        .sum::<f64>()
        / 4.0;
    assert!(delta.abs() <= 0.02, "{delta}");
}

#[test]
fn adjacency_null_has_no_block_structure() {
    let logs: Vec<RunLog> = (100..200)
        .map(|s| run(Condition::A, s, 500, ScriptedParams::default()))
        .collect();
    let adj = mean_adjacency(&logs).unwrap();
    assert_eq!(adj.n_runs, 100);
    assert!(adj.delta.abs() < 0.01, "{}", adj.delta);
}

#[test]
fn pair_turns_depend_only_on_schedule() {
    let a = run(Condition::B, 3, 500, ScriptedParams::with_delta(0.0));
    let b = run(
        Condition::B,
        3,
        500,
        ScriptedParams {
            base_rates: ActionRates::only(ActionType::Criticize),
            ..ScriptedParams::default()
        },
    );
    let turns = |log: &RunLog| {
        extract_contrastive_pairs(log)
            .iter()
            .map(|p| (p.actor, p.turn_ig, p.turn_og))
            .collect::<Vec<_>>()
    };
    assert!(!turns(&a).is_empty());
    assert_eq!(turns(&a), turns(&b));
}

#[test]
fn log_roundtrip_and_replay() {
    let log = run(Condition::C, 9, 300, ScriptedParams::with_delta(10.0));
    assert!(log.is_replay_consistent());
    let mut buf = Vec::new();
    write_runlog_to(&log, &mut buf).unwrap();
    let back = read_runlog_from(buf.as_slice()).unwrap();
    assert_eq!(back, log);
}
