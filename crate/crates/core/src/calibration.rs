//! Targeting-differential sweep: scripted compliment/neutral agents with a
//! differential of `delta_pp` toward in-group targets, run under visible
//! labels, measuring the final seed-mean bias.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_simulation, EngineError};
use crate::metrics::{compute_bias, MetricError};
use crate::model::{ActionType, Condition, SimulationConfig};
use crate::policies::{ActionRates, ParamsError, ScriptedParams, ScriptedPolicy};
use crate::streams::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSpec {
    pub delta_grid: Vec<f64>,
    pub seeds_per_cell: usize,
    pub base_compliment_rate: f64,
    pub n_agents: usize,
    pub n_turns: usize,
    pub target_side_updates: bool,
    pub master_seed: u64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        CalibrationSpec {
            delta_grid: (0..=10).map(|k| 2.0 * k as f64).collect(),
            seeds_per_cell: 1000,
            base_compliment_rate: 0.5,
            n_agents: 20,
            n_turns: 500,
            target_side_updates: true,
            master_seed: 0,
        }
    }
}

impl CalibrationSpec {
    /// Three grid points, 100 seeds each.
    pub fn quick() -> Self {
        CalibrationSpec {
            delta_grid: vec![0.0, 10.0, 20.0],
            seeds_per_cell: 100,
            ..CalibrationSpec::default()
        }
    }

    pub fn policy_params(&self, delta_pp: f64) -> Result<ScriptedParams, ParamsError> {
        let base = ActionRates::from_pairs(&[
            (ActionType::Compliment, self.base_compliment_rate),
            (ActionType::Neutral, 1.0 - self.base_compliment_rate),
        ])?;
        Ok(ScriptedParams {
            base_rates: base,
            delta_pp,
            favored_channel: ActionType::Compliment,
            ..ScriptedParams::default()
        })
    }

    /// Run seed for replicate `k` of grid cell `cell`.
    pub fn run_seed(&self, cell: usize, k: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &["calibration", &cell.to_string(), &k.to_string()],
        )
    }

    pub fn run_config(&self, seed: u64, delta_pp: f64) -> SimulationConfig {
        SimulationConfig {
            n_agents: self.n_agents,
            n_turns: self.n_turns,
            condition: Condition::B,
            seed,
            target_side_updates: self.target_side_updates,
            policy_label: format!("scripted:delta={delta_pp}"),
            ..SimulationConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub delta_pp: f64,
    pub mean_bias: f64,
    pub std_bias: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub rows: Vec<CalibrationRow>,
    /// Least-squares slope through the origin.
    pub slope: f64,
    pub fit_slope: f64,
    pub fit_intercept: f64,
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("empty grid or zero seeds per cell")]
    Empty,
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Final seed-mean bias of one replicate.
pub fn calibration_run(
    spec: &CalibrationSpec,
    cell: usize,
    k: usize,
) -> Result<f64, CalibrationError> {
    let delta = spec.delta_grid[cell];
    let mut policy = ScriptedPolicy::new(spec.policy_params(delta)?)?;
    let config = spec.run_config(spec.run_seed(cell, k), delta);
    let log = run_simulation(&config, &mut policy)?;
    Ok(compute_bias(&log.final_trust, &config.labels())?.seed_mean_bias)
}

pub fn run_calibration(spec: &CalibrationSpec) -> Result<CalibrationResult, CalibrationError> {
    if spec.delta_grid.is_empty() || spec.seeds_per_cell == 0 {
        return Err(CalibrationError::Empty);
    }
    for &d in &spec.delta_grid {
        spec.policy_params(d)?.group_rates()?;
    }
    let jobs: Vec<(usize, usize)> = (0..spec.delta_grid.len())
        .flat_map(|c| (0..spec.seeds_per_cell).map(move |k| (c, k)))
        .collect();
    let biases = jobs
        .par_iter()
        .map(|&(c, k)| calibration_run(spec, c, k))
        .collect::<Result<Vec<f64>, _>>()?;
    let rows: Vec<CalibrationRow> = spec
        .delta_grid
        .iter()
        .zip(biases.chunks(spec.seeds_per_cell))
        .map(|(&delta_pp, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            CalibrationRow {
                delta_pp,
                mean_bias: mean,
                std_bias: var.sqrt(),
                n_seeds: xs.len(),
            }
        })
        .collect();
    let (fit_slope, fit_intercept) = ols(&rows);
    Ok(CalibrationResult {
        slope: slope_through_origin(&rows),
        fit_slope,
        fit_intercept,
        rows,
    })
}

pub fn slope_through_origin(rows: &[CalibrationRow]) -> f64 {
    let sxy: f64 = rows.iter().map(|r| r.delta_pp * r.mean_bias).sum();
    let sxx: f64 = rows.iter().map(|r| r.delta_pp * r.delta_pp).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// `(slope, intercept)` of the ordinary least-squares line.
pub fn ols(rows: &[CalibrationRow]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.delta_pp).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.mean_bias).sum::<f64>() / n;
    let sxy: f64 = rows
        .iter()
        .map(|r| (r.delta_pp - mx) * (r.mean_bias - my))
        .sum();
    let sxx: f64 = rows.iter().map(|r| (r.delta_pp - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn predict_bias(delta_pp: f64, slope: f64) -> f64 {
    slope * delta_pp
}

pub fn write_calibration_csv<W: Write>(out: W, rows: &[CalibrationRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
