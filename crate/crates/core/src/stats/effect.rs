use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{PairedSample, StatError};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n - 1) variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Paired Cohen's d: mean of the differences over their standard deviation.
pub fn cohens_d_paired(sample: &PairedSample) -> Result<f64, StatError> {
    let d = sample.differences();
    let sd = sample_variance(&d).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return Err(StatError::ZeroVariance);
    }
    Ok(mean(&d) / sd)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Unequal-variance t test of `mean(a) - mean(b)`.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchResult, StatError> {
    for xs in [a, b] {
        if xs.len() < 2 {
            return Err(StatError::TooFew {
                needed: 2,
                got: xs.len(),
            });
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(StatError::NonFinite);
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    if va + vb == 0.0 {
        return Err(StatError::ZeroVariance);
    }
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|_| StatError::ZeroVariance)?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchResult { t, df, p })
}
