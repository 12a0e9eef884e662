//! Persistence and batch orchestration: config files, JSONL run logs,
//! sweeps with a manifest, and CSV analysis tables.

mod batch;
mod config;
mod jsonl;
mod tables;

pub use batch::{
    log_file_name, read_log_dir, run_sweep, unix_now, ManifestEntry, RunManifest, SweepPlan,
    ARTIFACT_VERSION,
};
pub use config::{
    build_policy, combined_hash, config_hash, parse_policy_spec, policy_label, ExperimentFile,
    PolicySpec,
};
pub use jsonl::{read_runlog, read_runlog_from, write_runlog, write_runlog_to};
pub use tables::{
    analyze, config_key, default_families, export_figdata, logs_hash, textscan_rows, write_bundle,
    write_csv, AnalysisBundle, AssortativityBar, HeatmapCell, SeriesPoint, TextscanRow,
};

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("log is truncated after line {last_good_line}")]
    Truncated { last_good_line: usize },
    #[error("{path}: {inner}")]
    InFile {
        path: String,
        inner: Box<RunIoError>,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("policy spec: {0}")]
    PolicySpec(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl RunIoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunIoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            e @ (RunIoError::Io { .. } | RunIoError::InFile { .. }) => e,
            other => RunIoError::InFile {
                path: path.display().to_string(),
                inner: Box::new(other),
            },
        }
    }
}
