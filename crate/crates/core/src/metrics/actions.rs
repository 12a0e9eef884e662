use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::{group_of, ActionType, AgentId, GroupLabel, RunLog, TurnRecord};
use crate::stats::{welch_t, WelchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    /// Mean in-group minus mean out-group actor-to-target delta; `None`
    /// when a stratum is empty.
    pub h: Option<f64>,
    pub n_same: usize,
    pub n_diff: usize,
    pub mean_same: Option<f64>,
    pub mean_diff: Option<f64>,
    /// Same-group deltas against different-group deltas within this run.
    pub welch: Option<WelchResult>,
}

pub fn action_homophily(log: &RunLog) -> HomophilyReport {
    homophily_of(&log.records)
}

pub(crate) fn homophily_of(records: &[TurnRecord]) -> HomophilyReport {
    let (same, diff): (Vec<&TurnRecord>, Vec<&TurnRecord>) =
        records.iter().partition(|r| r.is_in_group());
    let same: Vec<f64> = same.iter().map(|r| r.actor_to_target_delta()).collect();
    let diff: Vec<f64> = diff.iter().map(|r| r.actor_to_target_delta()).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let (mean_same, mean_diff) = (mean(&same), mean(&diff));
    HomophilyReport {
        h: mean_same.zip(mean_diff).map(|(a, b)| a - b),
        n_same: same.len(),
        n_diff: diff.len(),
        mean_same,
        mean_diff,
        welch: welch_t(&same, &diff).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionShare {
    pub action: ActionType,
    pub in_group_pct: f64,
    pub out_group_pct: f64,
    /// `in_group_pct - out_group_pct`; `None` when a stratum is empty.
    pub delta_pp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub rows: Vec<ActionShare>,
    pub n_in_group: usize,
    pub n_out_group: usize,
    pub in_group_counts: [u64; 6],
    pub out_group_counts: [u64; 6],
}

impl ActionDistribution {
    pub fn share(&self, action: ActionType) -> &ActionShare {
        &self.rows[action.index()]
    }
}

/// Executed-action counts over all turns, in `ActionType::ALL` order.
pub fn action_counts(log: &RunLog) -> [u64; 6] {
    let mut counts = [0u64; 6];
    for r in &log.records {
        counts[r.executed.index()] += 1;
    }
    counts
}

pub fn action_distribution_by_group(log: &RunLog) -> ActionDistribution {
    distribution_of(log.records.iter())
}

/// Pools the executed actions of several runs.
pub fn pooled_action_distribution<'a>(
    logs: impl IntoIterator<Item = &'a RunLog>,
) -> ActionDistribution {
    distribution_of(logs.into_iter().flat_map(|l| l.records.iter()))
}

fn distribution_of<'a>(records: impl Iterator<Item = &'a TurnRecord>) -> ActionDistribution {
    let mut ig = [0u64; 6];
    let mut og = [0u64; 6];
    for r in records {
        let slot = if r.is_in_group() { &mut ig } else { &mut og };
        slot[r.executed.index()] += 1;
    }
    let (n_in, n_out) = (ig.iter().sum::<u64>(), og.iter().sum::<u64>());
    let pct = |c: u64, n: u64| {
        if n == 0 {
            0.0
        } else {
            100.0 * c as f64 / n as f64
        }
    };
    let rows = ActionType::ALL
        .iter()
        .map(|&a| {
            let (i, o) = (pct(ig[a.index()], n_in), pct(og[a.index()], n_out));
            ActionShare {
                action: a,
                in_group_pct: i,
                out_group_pct: o,
                delta_pp: (n_in > 0 && n_out > 0).then_some(i - o),
            }
        })
        .collect();
    ActionDistribution {
        rows,
        n_in_group: n_in as usize,
        n_out_group: n_out as usize,
        in_group_counts: ig,
        out_group_counts: og,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAuditReport {
    /// Turns whose intended action was overridden by the budget.
    pub n_enforced: usize,
    /// Share of enforced turns aimed at an in-group target.
    pub r_attempt: Option<f64>,
    /// `r_attempt - baseline`.
    pub delta_attempt: Option<f64>,
    /// In-group share of partner draws under uniform pairing, `(N/2 - 1)/(N - 1)`.
    pub baseline: f64,
    /// In-group share of all turns in the log.
    pub empirical_baseline: Option<f64>,
}

pub fn budget_attempt_bias(log: &RunLog) -> BudgetAuditReport {
    let n = log.config.n_agents as f64;
    let baseline = (n / 2.0 - 1.0) / (n - 1.0);
    let enforced: Vec<&TurnRecord> = log.records.iter().filter(|r| r.budget_overridden).collect();
    let in_share = |rs: &mut dyn Iterator<Item = &TurnRecord>| {
        let (mut k, mut total) = (0usize, 0usize);
        for r in rs {
            total += 1;
            k += r.is_in_group() as usize;
        }
        (total > 0).then(|| k as f64 / total as f64)
    };
    let r_attempt = in_share(&mut enforced.iter().copied());
    BudgetAuditReport {
        n_enforced: enforced.len(),
        r_attempt,
        delta_attempt: r_attempt.map(|r| r - baseline),
        baseline,
        empirical_baseline: in_share(&mut log.records.iter()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyReport {
    /// Row/column order: all Kappa agents, then all Tilon agents.
    pub order: Vec<AgentId>,
    pub matrix: Vec<Vec<f64>>,
    pub t_in: f64,
    pub t_out: f64,
    pub delta: f64,
    pub n_runs: usize,
}

/// Element-wise mean of the final trust matrices, reordered by group.
pub fn mean_adjacency(runs: &[RunLog]) -> Result<AdjacencyReport, MetricError> {
    let first = runs.first().ok_or(MetricError::NoRuns)?;
    let n = first.config.n_agents;
    if runs
        .iter()
        .any(|r| r.config.n_agents != n || r.final_trust.n() != n)
    {
        return Err(MetricError::Heterogeneous);
    }
    let mut order: Vec<AgentId> = (0..n)
        .map(AgentId)
        .filter(|a| group_of(*a) == GroupLabel::Kappa)
        .collect();
    order.extend(
        (0..n)
            .map(AgentId)
            .filter(|a| group_of(*a) == GroupLabel::Tilon),
    );
    let k = runs.len() as f64;
    let mut matrix = vec![vec![0.0; n]; n];
    for (r, &a) in order.iter().enumerate() {
        for (c, &b) in order.iter().enumerate() {
            matrix[r][c] = runs
                .iter()
                .map(|run| run.final_trust.get(a.0, b.0))
                .sum::<f64>()
                / k;
        }
    }
    let (mut s_in, mut n_in, mut s_out, mut n_out) = (0.0, 0usize, 0.0, 0usize);
    for (r, &a) in order.iter().enumerate() {
        for (c, &b) in order.iter().enumerate() {
            if r == c {
                continue;
            }
            if group_of(a) == group_of(b) {
                s_in += matrix[r][c];
                n_in += 1;
            } else {
                s_out += matrix[r][c];
                n_out += 1;
            }
        }
    }
    let (t_in, t_out) = (s_in / n_in as f64, s_out / n_out as f64);
    Ok(AdjacencyReport {
        order,
        matrix,
        t_in,
        t_out,
        delta: t_in - t_out,
        n_runs: runs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AppliedDelta, SimulationConfig, TrustMatrix};

    fn record(
        turn: usize,
        actor: usize,
        target: usize,
        action: ActionType,
        delta: f64,
    ) -> TurnRecord {
        let (a, t) = (AgentId(actor), AgentId(target));
        TurnRecord {
            turn,
            actor: a,
            actor_group: group_of(a),
            target: t,
            target_group: group_of(t),
            intended: action,
            executed: action,
            budget_overridden: false,
            gossip_target: None,
            alliance_accepted: None,
            policy_error: false,
            reasoning: String::new(),
            deltas_applied: vec![
                AppliedDelta {
                    from: a,
                    to: t,
                    delta,
                },
                AppliedDelta {
                    from: t,
                    to: a,
                    delta: 0.3,
                },
            ],
        }
    }

    fn log(records: Vec<TurnRecord>) -> RunLog {
        let config = SimulationConfig {
            n_agents: 4,
            n_turns: records.len(),
            ..SimulationConfig::default()
        };
        RunLog {
            config,
            records,
            final_trust: TrustMatrix::new(4),
        }
    }

    #[test]
    fn constant_delta_gives_zero_h() {
        let l = log(vec![
            record(1, 0, 2, ActionType::Compliment, 0.15),
            record(2, 0, 1, ActionType::Compliment, 0.15),
            record(3, 1, 3, ActionType::Compliment, 0.15),
        ]);
        assert_eq!(action_homophily(&l).h, Some(0.0));
    }

    #[test]
    fn compliment_in_neutral_out() {
        let l = log(vec![
            record(1, 0, 2, ActionType::Compliment, 0.15),
            record(2, 1, 3, ActionType::Compliment, 0.15),
            record(3, 0, 1, ActionType::Neutral, 0.0),
            record(4, 2, 3, ActionType::Neutral, 0.0),
        ]);
        let h = action_homophily(&l);
        assert!((h.h.unwrap() - 0.15).abs() < 1e-15);
        assert_eq!((h.n_same, h.n_diff), (2, 2));
    }

    #[test]
    fn empty_stratum_is_undefined() {
        let h = action_homophily(&log(vec![record(1, 0, 2, ActionType::Compliment, 0.15)]));
        assert_eq!(h.h, None);
        assert_eq!(h.n_diff, 0);
    }

    #[test]
    fn single_turn_distribution() {
        let d =
            action_distribution_by_group(&log(vec![record(1, 0, 2, ActionType::Compliment, 0.15)]));
        assert_eq!(d.share(ActionType::Compliment).in_group_pct, 100.0);
        assert_eq!(d.n_out_group, 0);
        assert!(d
            .rows
            .iter()
            .all(|r| r.out_group_pct == 0.0 && r.delta_pp.is_none()));
    }

    #[test]
    fn targeted_attempts() {
        let mut recs = vec![
            record(1, 0, 2, ActionType::Neutral, 0.0),
            record(2, 1, 3, ActionType::Neutral, 0.0),
            record(3, 0, 1, ActionType::Neutral, 0.0),
        ];
        recs[0].budget_overridden = true;
        recs[1].budget_overridden = true;
        let r = budget_attempt_bias(&log(recs));
        assert_eq!(r.n_enforced, 2);
        assert_eq!(r.r_attempt, Some(1.0));
        assert!((r.baseline - 1.0 / 3.0).abs() < 1e-15);
        let none = budget_attempt_bias(&log(vec![record(1, 0, 1, ActionType::Neutral, 0.0)]));
        assert_eq!((none.n_enforced, none.r_attempt), (0, None));
    }

    #[test]
    fn baseline_for_twenty() {
        let l = RunLog {
            config: SimulationConfig::default(),
            records: vec![],
            final_trust: TrustMatrix::new(20),
        };
        assert!((budget_attempt_bias(&l).baseline - 9.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn adjacency_of_identical_runs() {
        let mut l = log(vec![]);
        l.final_trust.set(0, 2, 0.9).unwrap();
        l.final_trust.set(1, 2, 0.1).unwrap();
        let rep = mean_adjacency(&[l.clone(), l.clone(), l.clone()]).unwrap();
        assert_eq!(
            rep.order,
            vec![AgentId(0), AgentId(2), AgentId(1), AgentId(3)]
        );
        let single = &l.final_trust;
        for (r, a) in rep.order.iter().enumerate() {
            for (c, b) in rep.order.iter().enumerate() {
                assert!((rep.matrix[r][c] - single.get(a.0, b.0)).abs() < 1e-15);
            }
        }
        assert!((rep.matrix[0][1] - 0.9).abs() < 1e-15);
        assert!((rep.matrix[2][1] - 0.1).abs() < 1e-15);
        // in-group pairs: 4 entries with one at 0.9; out-group: 8 entries with one at 0.1
        assert!((rep.t_in - (0.5 * 3.0 + 0.9) / 4.0).abs() < 1e-12);
        assert!((rep.t_out - (0.5 * 7.0 + 0.1) / 8.0).abs() < 1e-12);
        assert_eq!(mean_adjacency(&[]), Err(MetricError::NoRuns));
    }
}
