use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{bh_adjust, cohens_d_paired, wilcoxon_signed_rank, PairedSample, Side, StatError};

/// Per-seed values of one metric, keyed by (config, condition).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    cells: BTreeMap<(String, String), BTreeMap<u64, f64>>,
}

impl MetricTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, config: &str, condition: &str, seed: u64, value: f64) {
        self.cells
            .entry((config.to_string(), condition.to_string()))
            .or_default()
            .insert(seed, value);
    }

    pub fn get(&self, config: &str, condition: &str) -> Option<&BTreeMap<u64, f64>> {
        self.cells.get(&(config.to_string(), condition.to_string()))
    }

    pub fn configs(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.cells.keys().map(|(c, _)| c).collect();
        set.into_iter().cloned().collect()
    }
}

/// `treatment` vs `control`, both condition names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contrast {
    pub treatment: String,
    pub control: String,
}

impl Contrast {
    pub fn new(control: &str, treatment: &str) -> Self {
        Contrast {
            treatment: treatment.to_string(),
            control: control.to_string(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}->{}", self.control, self.treatment)
    }
}

/// A set of tests adjusted together: every config crossed with every contrast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFamily {
    pub name: String,
    pub configs: Vec<String>,
    pub contrasts: Vec<Contrast>,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub family: String,
    pub config: String,
    pub contrast: String,
    pub n_seeds: usize,
    /// Wilcoxon W.
    pub statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: Option<f64>,
    pub effect_d: Option<f64>,
    pub side: Side,
    pub exact: bool,
    /// Test undefined (e.g. all differences zero); p set to 1.
    pub undefined: bool,
    pub mean_treatment: f64,
    pub mean_control: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("no data for config {config:?} condition {condition:?}")]
    MissingCell { config: String, condition: String },
    #[error("seed sets differ for config {config:?}: {control} vs {treatment}")]
    SeedMismatch {
        config: String,
        control: String,
        treatment: String,
    },
    #[error(transparent)]
    Stat(#[from] StatError),
}

fn paired_for(
    table: &MetricTable,
    config: &str,
    contrast: &Contrast,
) -> Result<PairedSample, PipelineError> {
    let cell = |cond: &str| {
        table
            .get(config, cond)
            .ok_or_else(|| PipelineError::MissingCell {
                config: config.to_string(),
                condition: cond.to_string(),
            })
    };
    let t = cell(&contrast.treatment)?;
    let c = cell(&contrast.control)?;
    if !t.keys().eq(c.keys()) {
        return Err(PipelineError::SeedMismatch {
            config: config.to_string(),
            control: contrast.control.clone(),
            treatment: contrast.treatment.clone(),
        });
    }
    Ok(PairedSample::new(
        t.values().copied().collect(),
        c.values().copied().collect(),
    )?)
}

/// Seed-matched Wilcoxon tests with paired d, BH-adjusted within each family.
pub fn pipeline_condition_contrast(
    table: &MetricTable,
    families: &[TestFamily],
) -> Result<Vec<StatResult>, PipelineError> {
    let mut out = Vec::new();
    for family in families {
        let start = out.len();
        for config in &family.configs {
            for contrast in &family.contrasts {
                let sample = paired_for(table, config, contrast)?;
                let mean_of = |cond: &str| {
                    let cell = table.get(config, cond).expect("checked by paired_for");
                    cell.values().sum::<f64>() / cell.len() as f64
                };
                let mean_treatment = mean_of(&contrast.treatment);
                let mean_control = mean_of(&contrast.control);
                let (statistic, p_raw, exact, undefined) =
                    match wilcoxon_signed_rank(&sample, family.side) {
                        Ok(r) => (r.w, r.p, r.exact, false),
                        Err(StatError::AllZeroDifferences) => (0.0, 1.0, false, true),
                        Err(e) => return Err(e.into()),
                    };
                out.push(StatResult {
                    family: family.name.clone(),
                    config: config.clone(),
                    contrast: contrast.label(),
                    n_seeds: sample.len(),
                    statistic,
                    p_raw,
                    p_adjusted: None,
                    effect_d: cohens_d_paired(&sample).ok(),
                    side: family.side,
                    exact,
                    undefined,
                    mean_treatment,
                    mean_control,
                });
            }
        }
        let raw: Vec<f64> = out[start..].iter().map(|r| r.p_raw).collect();
        for (r, q) in out[start..].iter_mut().zip(bh_adjust(&raw)) {
            r.p_adjusted = Some(q);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(configs: usize) -> TestFamily {
        TestFamily {
            name: "primary".into(),
            configs: (0..configs).map(|i| format!("m{i}")).collect(),
            contrasts: vec![Contrast::new("A", "B"), Contrast::new("B", "C")],
            side: Side::OneSidedGreater,
        }
    }

    #[test]
    fn twelve_tests_adjusted_together() {
        let mut t = MetricTable::new();
        for m in 0..6 {
            for seed in 0..20u64 {
                let base = (seed as f64 * 0.37).sin() * 0.01;
                t.insert(&format!("m{m}"), "A", seed, base);
                t.insert(
                    &format!("m{m}"),
                    "B",
                    seed,
                    base + 0.05 + seed as f64 * 1e-4,
                );
                t.insert(
                    &format!("m{m}"),
                    "C",
                    seed,
                    base + 0.05 + seed as f64 * 1e-4 + (seed as f64).cos() * 0.01,
                );
            }
        }
        let res = pipeline_condition_contrast(&t, &[family(6)]).unwrap();
        assert_eq!(res.len(), 12);
        let raw: Vec<f64> = res.iter().map(|r| r.p_raw).collect();
        let adj = bh_adjust(&raw);
        for (r, q) in res.iter().zip(adj) {
            assert_eq!(r.p_adjusted, Some(q));
            assert!(q >= r.p_raw);
        }
        let ab: Vec<&StatResult> = res.iter().filter(|r| r.contrast == "A->B").collect();
        assert!(ab
            .iter()
            .all(|r| r.p_adjusted.unwrap() < 0.001 && r.effect_d.unwrap() > 2.0));
    }

    #[test]
    fn identical_metrics_flagged() {
        let mut t = MetricTable::new();
        for seed in 0..5u64 {
            for c in ["A", "B", "C"] {
                t.insert("m0", c, seed, 0.25);
            }
        }
        let res = pipeline_condition_contrast(&t, &[family(1)]).unwrap();
        assert!(res
            .iter()
            .all(|r| r.undefined && r.p_raw == 1.0 && r.effect_d.is_none()));
    }

    #[test]
    fn mismatched_seeds_fault() {
        let mut t = MetricTable::new();
        for seed in 0..5u64 {
            t.insert("m0", "A", seed, 0.1);
            t.insert("m0", "B", seed + 1, 0.2);
            t.insert("m0", "C", seed, 0.2);
        }
        assert!(matches!(
            pipeline_condition_contrast(&t, &[family(1)]),
            Err(PipelineError::SeedMismatch { .. })
        ));
    }
}
