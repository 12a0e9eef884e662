use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{PairedSample, Side, StatError};

/// Largest tie-free sample for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub w: f64,
    pub p: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
pub(crate) fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of subsets of `{1..n}` with each possible rank sum.
fn signed_rank_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for k in 1..=n {
        for s in (k..=max).rev() {
            counts[s] += counts[s - k];
        }
    }
    counts
}

fn exact_p(w: usize, n: usize, side: Side) -> f64 {
    let counts = signed_rank_counts(n);
    let total = (1u64 << n) as f64;
    let upper: u64 = counts[w..].iter().sum();
    let lower: u64 = counts[..=w].iter().sum();
    match side {
        Side::OneSidedGreater => upper as f64 / total,
        Side::TwoSided => (2.0 * upper.min(lower) as f64 / total).min(1.0),
    }
}

/// Paired signed-rank test of `treatment - control`.
///
/// Zero differences are dropped. Tie-free samples with `n <= 25` use the
/// exact null distribution; otherwise the normal approximation with tie
/// and continuity corrections.
pub fn wilcoxon_signed_rank(
    sample: &PairedSample,
    side: Side,
) -> Result<WilcoxonResult, StatError> {
    let diffs: Vec<f64> = sample
        .differences()
        .into_iter()
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(StatError::AllZeroDifferences);
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatError::NonFinite);
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    if ties.is_empty() && n <= EXACT_MAX_N {
        return Ok(WilcoxonResult {
            w,
            p: exact_p(w.round() as usize, n, side),
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let normal = Normal::standard();
    let p = match side {
        Side::OneSidedGreater => normal.sf((w - mean - 0.5) / sd),
        Side::TwoSided => {
            let z = ((w - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * normal.sf(z)).min(1.0)
        }
    };
    Ok(WilcoxonResult {
        w,
        p,
        n,
        exact: false,
    })
}
