use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::{GroupLabel, RunLog, TrustMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_agent_bias: Vec<f64>,
    pub seed_mean_bias: f64,
}

/// Mean trust toward the agent's own group (self excluded) minus mean trust
/// toward the other group.
pub fn compute_bias(trust: &TrustMatrix, labels: &[GroupLabel]) -> Result<BiasReport, MetricError> {
    let n = trust.n();
    if labels.len() != n {
        return Err(MetricError::LabelCount {
            labels: labels.len(),
            agents: n,
        });
    }
    let per_agent_bias = (0..n)
        .map(|i| {
            let (mut sum_in, mut n_in, mut sum_out, mut n_out) = (0.0, 0usize, 0.0, 0usize);
            for (j, &t) in trust.row(i).iter().enumerate() {
                if j == i {
                    continue;
                }
                if labels[j] == labels[i] {
                    sum_in += t;
                    n_in += 1;
                } else {
                    sum_out += t;
                    n_out += 1;
                }
            }
            if n_in == 0 || n_out == 0 {
                return Err(MetricError::EmptyGroup);
            }
            Ok(sum_in / n_in as f64 - sum_out / n_out as f64)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let seed_mean_bias = per_agent_bias.iter().sum::<f64>() / n as f64;
    Ok(BiasReport {
        per_agent_bias,
        seed_mean_bias,
    })
}

/// `(turn, seed_mean_bias)` at turn 0, every `stride` turns, and the final
/// turn. The trust state is rebuilt from the logged deltas.
pub fn bias_time_series(log: &RunLog, stride: usize) -> Result<Vec<(usize, f64)>, MetricError> {
    if stride == 0 {
        return Err(MetricError::ZeroStride);
    }
    let labels = log.config.labels();
    let mut trust = TrustMatrix::new(log.config.n_agents);
    let mut series = vec![(0, compute_bias(&trust, &labels)?.seed_mean_bias)];
    let last = log.records.len();
    for (k, rec) in log.records.iter().enumerate() {
        for d in &rec.deltas_applied {
            trust.add_clamped(d.from.0, d.to.0, d.delta);
        }
        let turn = k + 1;
        if turn % stride == 0 || turn == last {
            series.push((turn, compute_bias(&trust, &labels)?.seed_mean_bias));
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels_for;
    use proptest::prelude::*;

    fn oracle(t: &[Vec<f64>], labels: &[GroupLabel]) -> Vec<f64> {
        let n = t.len();
        let mut out = Vec::new();
        for i in 0..n {
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for j in 0..n {
                if i != j {
                    if labels[i] == labels[j] {
                        ins.push(t[i][j]);
                    } else {
                        outs.push(t[i][j]);
                    }
                }
            }
            let m = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
            out.push(m(&ins) - m(&outs));
        }
        out
    }

    #[test]
    fn forced_arithmetic() {
        let labels = labels_for(6);
        let mut t = TrustMatrix::new(6);
        for j in [2, 4] {
            t.set(0, j, 0.7).unwrap();
        }
        let r = compute_bias(&t, &labels).unwrap();
        assert!((r.per_agent_bias[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn uniform_matrix_is_unbiased() {
        let r = compute_bias(&TrustMatrix::new(20), &labels_for(20)).unwrap();
        assert!(r.per_agent_bias.iter().all(|b| *b == 0.0));
        assert_eq!(r.seed_mean_bias, 0.0);
    }

    #[test]
    fn singleton_group_is_a_fault() {
        let labels = vec![GroupLabel::Kappa, GroupLabel::Tilon, GroupLabel::Tilon];
        assert_eq!(
            compute_bias(&TrustMatrix::new(3), &labels),
            Err(MetricError::EmptyGroup)
        );
    }

    fn matrix(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), n).prop_map(|mut rows| {
            for (i, r) in rows.iter_mut().enumerate() {
                r[i] = 0.5;
            }
            rows
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_double_loop(rows in matrix(6)) {
            let labels = labels_for(6);
            let got = compute_bias(&TrustMatrix::from_rows(rows.clone()).unwrap(), &labels).unwrap();
            for (a, b) in got.per_agent_bias.iter().zip(oracle(&rows, &labels)) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(a));
            }
            let mean = got.per_agent_bias.iter().sum::<f64>() / 6.0;
            prop_assert_eq!(mean, got.seed_mean_bias);
        }

        /// Relabelling via the parity swap 2k <-> 2k+1 permutes agents
        /// across groups; bias follows the agent and the seed mean holds.
        #[test]
        fn label_swap_by_transposition(rows in matrix(8)) {
            let labels = labels_for(8);
            let swap = |i: usize| i ^ 1;
            let mut moved = vec![vec![0.0; 8]; 8];
            for i in 0..8 {
                for j in 0..8 {
                    moved[swap(i)][swap(j)] = rows[i][j];
                }
            }
            let a = compute_bias(&TrustMatrix::from_rows(rows).unwrap(), &labels).unwrap();
            let b = compute_bias(&TrustMatrix::from_rows(moved).unwrap(), &labels).unwrap();
            for i in 0..8 {
                prop_assert!((a.per_agent_bias[i] - b.per_agent_bias[swap(i)]).abs() < 1e-12);
            }
            prop_assert!((a.seed_mean_bias - b.seed_mean_bias).abs() < 1e-12);
        }
    }
}
