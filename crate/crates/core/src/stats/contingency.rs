use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::factorial::ln_binomial;

use super::StatError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    /// Columns kept after dropping all-zero ones.
    pub kept_columns: Vec<usize>,
}

fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").sf(x)
}

/// Pearson chi-square test of independence on an `R x K` count table.
/// All-zero columns are dropped first.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<ChiSquareResult, StatError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(StatError::DegenerateTable);
    }
    let kept_columns: Vec<usize> = (0..cols)
        .filter(|&j| table.iter().any(|r| r[j] > 0))
        .collect();
    let row_totals: Vec<f64> = table
        .iter()
        .map(|r| kept_columns.iter().map(|&j| r[j] as f64).sum())
        .collect();
    if kept_columns.len() < 2 || row_totals.contains(&0.0) {
        return Err(StatError::DegenerateTable);
    }
    let col_totals: Vec<f64> = kept_columns
        .iter()
        .map(|&j| table.iter().map(|r| r[j] as f64).sum())
        .collect();
    let grand: f64 = row_totals.iter().sum();
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (k, &j) in kept_columns.iter().enumerate() {
            let expected = row_totals[i] * col_totals[k] / grand;
            let diff = row[j] as f64 - expected;
            chi2 += diff * diff / expected;
        }
    }
    let df = (rows - 1) * (kept_columns.len() - 1);
    Ok(ChiSquareResult {
        chi2,
        df,
        p: chi2_sf(chi2, df as f64),
        kept_columns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub n10: u64,
    pub n01: u64,
    /// Continuity-corrected statistic.
    pub chi2: f64,
    pub p_chi2: f64,
    /// Two-sided exact binomial p on the discordant pairs.
    pub p_exact: f64,
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_upper_tail(k: u64, n: u64) -> f64 {
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    (k..=n).map(|i| (ln_binomial(n, i) - ln_half_n).exp()).sum()
}

pub fn mcnemar(n10: u64, n01: u64) -> Result<McNemarResult, StatError> {
    let n = n10 + n01;
    if n == 0 {
        return Err(StatError::DegenerateTable);
    }
    let gap = (n10.abs_diff(n01) as f64 - 1.0).max(0.0);
    let chi2 = gap * gap / n as f64;
    let p_exact = (2.0 * binomial_upper_tail(n10.max(n01), n)).min(1.0);
    Ok(McNemarResult {
        n10,
        n01,
        chi2,
        p_chi2: chi2_sf(chi2, 1.0),
        p_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_rows() {
        let r = chi_square_independence(&[vec![5, 3, 2], vec![5, 3, 2]]).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_association() {
        let r = chi_square_independence(&[vec![10, 0], vec![0, 10]]).unwrap();
        assert!((r.chi2 - 20.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn zero_columns_dropped() {
        let r = chi_square_independence(&[vec![4, 0, 6, 2, 0, 9], vec![5, 0, 3, 7, 0, 1]]).unwrap();
        assert_eq!(r.df, 3);
        assert_eq!(r.kept_columns, vec![0, 2, 3, 5]);
    }

    #[test]
    fn single_column_is_degenerate() {
        assert_eq!(
            chi_square_independence(&[vec![4, 0], vec![7, 0]]),
            Err(StatError::DegenerateTable)
        );
    }

    #[test]
    fn mcnemar_hand_cases() {
        let tie = mcnemar(5, 5).unwrap();
        assert_eq!(tie.chi2, 0.0);
        assert_eq!(tie.p_exact, 1.0);
        let r = mcnemar(15, 5).unwrap();
        assert!((r.chi2 - 4.05).abs() < 1e-12);
        // 2 * sum_{k=15}^{20} C(20, k) / 2^20 = 2 * 21700 / 1048576
        assert!((r.p_exact - 2.0 * 21700.0 / 1048576.0).abs() < 1e-12);
        assert!((r.p_exact - 0.0414).abs() < 1e-4);
        assert_eq!(mcnemar(0, 0), Err(StatError::DegenerateTable));
    }

    proptest! {
        #[test]
        fn mcnemar_symmetric(a in 0u64..500, b in 0u64..500) {
            prop_assume!(a + b > 0);
            let x = mcnemar(a, b).unwrap();
            let y = mcnemar(b, a).unwrap();
            prop_assert_eq!(x.chi2, y.chi2);
            prop_assert_eq!(x.p_exact, y.p_exact);
        }
    }
}
