use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_policy, combined_hash, config_hash, read_runlog, write_runlog, PolicySpec, RunIoError,
};
use crate::engine::run_simulation;
use crate::model::{Condition, RunLog, SimulationConfig};
use crate::policies::BackendConfig;

pub const ARTIFACT_VERSION: &str = "mgsim-runlog/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub condition: Condition,
    pub seed: u64,
    pub config_hash: String,
    pub path: String,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    /// Combined hash over the per-run config hashes.
    pub config_hash: String,
    pub conditions: Vec<Condition>,
    pub seeds: Vec<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub runs: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok).count()
    }

    pub fn write(&self, path: &Path) -> Result<(), RunIoError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| RunIoError::io(path, e))
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: SimulationConfig,
    pub policy: PolicySpec,
    pub backend: BackendConfig,
    pub conditions: Vec<Condition>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub parallel: bool,
}

pub fn log_file_name(condition: Condition, seed: u64) -> String {
    format!("{}_seed{:04}.jsonl", condition, seed)
}

fn run_one(plan: &SweepPlan, condition: Condition, seed: u64) -> ManifestEntry {
    let config = SimulationConfig {
        condition,
        seed,
        ..plan.base.clone()
    };
    let path = plan.out_dir.join(log_file_name(condition, seed));
    let result = build_policy(&plan.policy, &plan.backend)
        .and_then(|mut p| {
            run_simulation(&config, p.as_mut()).map_err(|e| RunIoError::Run(e.to_string()))
        })
        .and_then(|log| write_runlog(&log, &path));
    ManifestEntry {
        condition,
        seed,
        config_hash: config_hash(&config),
        path: path.file_name().unwrap().to_string_lossy().into_owned(),
        ok: result.is_ok(),
        error: result.err().map(|e| e.to_string()),
    }
}

/// Runs every condition x seed, one log file each, then writes
/// `manifest.json`. Failed runs are recorded in the manifest.
pub fn run_sweep(plan: &SweepPlan) -> Result<RunManifest, RunIoError> {
    std::fs::create_dir_all(&plan.out_dir).map_err(|e| RunIoError::io(&plan.out_dir, e))?;
    let started_unix = unix_now();
    let jobs: Vec<(Condition, u64)> = plan
        .conditions
        .iter()
        .flat_map(|&c| plan.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let runs: Vec<ManifestEntry> = if plan.parallel {
        jobs.par_iter().map(|&(c, s)| run_one(plan, c, s)).collect()
    } else {
        jobs.iter().map(|&(c, s)| run_one(plan, c, s)).collect()
    };
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        config_hash: combined_hash(runs.iter().map(|r| r.config_hash.as_str())),
        conditions: plan.conditions.clone(),
        seeds: plan.seeds.clone(),
        started_unix,
        finished_unix: unix_now(),
        runs,
    };
    manifest.write(&plan.out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Every `*.jsonl` file in `dir`, sorted by file name.
pub fn read_log_dir(dir: &Path) -> Result<Vec<RunLog>, RunIoError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| RunIoError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.par_iter().map(|p| read_runlog(p)).collect()
}
