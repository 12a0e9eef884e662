//! Inference kernels for condition contrasts and trace audits.

mod contingency;
mod effect;
mod multiple;
mod pipeline;
mod wilcoxon;

pub use contingency::{chi_square_independence, mcnemar, ChiSquareResult, McNemarResult};
pub use effect::{cohens_d_paired, mean, sample_variance, welch_t, WelchResult};
pub use multiple::bh_adjust;
pub use pipeline::{
    pipeline_condition_contrast, Contrast, MetricTable, PipelineError, StatResult, TestFamily,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Alternative: treatment > control.
    OneSidedGreater,
    TwoSided,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::OneSidedGreater => "one_sided_greater",
            Side::TwoSided => "two_sided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite input")]
    NonFinite,
    #[error("degenerate contingency table")]
    DegenerateTable,
}

/// Observations matched by seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    treatment: Vec<f64>,
    control: Vec<f64>,
}

impl PairedSample {
    pub fn new(treatment: Vec<f64>, control: Vec<f64>) -> Result<Self, StatError> {
        if treatment.len() != control.len() {
            return Err(StatError::LengthMismatch(treatment.len(), control.len()));
        }
        if treatment.len() < 2 {
            return Err(StatError::TooFew {
                needed: 2,
                got: treatment.len(),
            });
        }
        Ok(PairedSample { treatment, control })
    }

    pub fn len(&self) -> usize {
        self.treatment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treatment.is_empty()
    }

    /// `treatment[i] - control[i]`.
    pub fn differences(&self) -> Vec<f64> {
        self.treatment
            .iter()
            .zip(&self.control)
            .map(|(t, c)| t - c)
            .collect()
    }

    pub fn swapped(&self) -> PairedSample {
        PairedSample {
            treatment: self.control.clone(),
            control: self.treatment.clone(),
        }
    }
}
