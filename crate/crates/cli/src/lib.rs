//! Subcommands of the `mgsim` binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mgsim_core::calibration::{run_calibration, write_calibration_csv, CalibrationSpec};
use mgsim_core::model::{Condition, SimulationConfig};
use mgsim_core::policies::BackendConfig;
use mgsim_core::run_simulation;
use mgsim_core::runio::{
    analyze, build_policy, export_figdata, logs_hash, parse_policy_spec, policy_label,
    read_log_dir, run_sweep, textscan_rows, write_bundle, write_csv, write_runlog, ExperimentFile,
    PolicySpec, SweepPlan,
};

#[derive(Debug, Parser)]
#[command(
    name = "mgsim",
    version,
    about = "Minimal-group trust simulator and bias audit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its JSONL log.
    Run(RunArgs),
    /// Run conditions x seeds, one log per run, plus manifest.json.
    Sweep(SweepArgs),
    /// Targeting-differential calibration sweep.
    Calibrate(CalibrateArgs),
    /// Metrics and condition contrasts over a log directory.
    Analyze(DirArgs),
    /// Mention rates and contrastive-pair asymmetry over a log directory.
    Pairs(DirArgs),
    /// Figure-ready CSVs from a log directory.
    ExportFigdata(FigArgs),
}

#[derive(Debug, Args)]
pub struct SetupArgs {
    /// TOML file with [simulation], [policy] and [backend] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Policy spec, e.g. `scripted:delta=10` or `backend:model=name`.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub turns: Option<usize>,
    #[arg(long)]
    pub agents: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub setup: SetupArgs,
    #[arg(long)]
    pub condition: Option<Condition>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub setup: SetupArgs,
    /// Comma-separated conditions.
    #[arg(long, value_delimiter = ',', default_value = "A,B,C")]
    pub conditions: Vec<Condition>,
    /// Number of seeds.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Run one job at a time.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Three grid points with 100 seeds each.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub turns: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub master_seed: u64,
    /// Disable the reciprocal (target-side) trust update.
    #[arg(long)]
    pub no_reciprocation: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DirArgs {
    /// Directory of JSONL logs.
    #[arg(long)]
    pub logs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FigArgs {
    #[arg(long)]
    pub logs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Turns between time-series snapshots.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
}

/// Config, policy and backend after applying file and flag overrides.
pub fn resolve_setup(setup: &SetupArgs) -> Result<(SimulationConfig, PolicySpec, BackendConfig)> {
    let mut file = match &setup.config {
        Some(path) => ExperimentFile::load(path)?,
        None => ExperimentFile::default(),
    };
    if let Some(spec) = &setup.policy {
        file.policy = parse_policy_spec(spec, &mut file.backend)?;
    }
    if let Some(t) = setup.turns {
        file.simulation.n_turns = t;
    }
    if let Some(n) = setup.agents {
        file.simulation.n_agents = n;
    }
    file.simulation.policy_label = policy_label(&file.policy, &file.backend);
    file.simulation.validate()?;
    Ok((file.simulation, file.policy, file.backend))
}

fn run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let (mut config, policy, backend) = resolve_setup(&args.setup)?;
    if let Some(c) = args.condition {
        config.condition = c;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let mut p = build_policy(&policy, &backend)?;
    let log = run_simulation(&config, p.as_mut())?;
    write_runlog(&log, &args.out)?;
    let errors = log.records.iter().filter(|r| r.policy_error).count();
    writeln!(
        out,
        "wrote {} ({} turns, {} policy errors)",
        args.out.display(),
        log.records.len(),
        errors
    )?;
    Ok(())
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (base, policy, backend) = resolve_setup(&args.setup)?;
    let plan = SweepPlan {
        base,
        policy,
        backend,
        conditions: args.conditions.clone(),
        seeds: (args.first_seed..args.first_seed + args.seeds).collect(),
        out_dir: args.out.clone(),
        parallel: !args.serial,
    };
    let manifest = run_sweep(&plan)?;
    writeln!(
        out,
        "{} runs, {} failed, manifest {}",
        manifest.runs.len(),
        manifest.failures(),
        args.out.join("manifest.json").display()
    )?;
    for r in manifest.runs.iter().filter(|r| !r.ok) {
        writeln!(
            out,
            "  failed {} seed {}: {}",
            r.condition,
            r.seed,
            r.error.as_deref().unwrap_or("")
        )?;
    }
    if manifest.failures() > 0 {
        bail!(
            "{} of {} runs failed",
            manifest.failures(),
            manifest.runs.len()
        );
    }
    Ok(())
}

fn calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = if args.quick {
        CalibrationSpec::quick()
    } else {
        CalibrationSpec::default()
    };
    if let Some(g) = &args.grid {
        spec.delta_grid = g.clone();
    }
    if let Some(s) = args.seeds {
        spec.seeds_per_cell = s;
    }
    if let Some(t) = args.turns {
        spec.n_turns = t;
    }
    spec.master_seed = args.master_seed;
    spec.target_side_updates = !args.no_reciprocation;
    let start = Instant::now();
    let result = run_calibration(&spec)?;
    let file = std::fs::File::create(&args.out).with_context(|| args.out.display().to_string())?;
    write_calibration_csv(file, &result.rows)?;
    writeln!(out, "delta_pp  mean_bias  std_bias  n")?;
    for r in &result.rows {
        writeln!(
            out,
            "{:8.1}  {:+.4}    {:.4}    {}",
            r.delta_pp, r.mean_bias, r.std_bias, r.n_seeds
        )?;
    }
    writeln!(
        out,
        "slope (through origin) {:.5}/pp; with intercept {:.5}/pp + {:+.4}; {:.1}s",
        result.slope,
        result.fit_slope,
        result.fit_intercept,
        start.elapsed().as_secs_f64()
    )?;
    Ok(())
}

fn load_logs(dir: &Path) -> Result<Vec<mgsim_core::RunLog>> {
    let logs = read_log_dir(dir)?;
    if logs.is_empty() {
        bail!("no .jsonl logs in {}", dir.display());
    }
    Ok(logs)
}

fn analyze_cmd(args: &DirArgs, out: &mut dyn Write) -> Result<()> {
    let logs = load_logs(&args.logs)?;
    let bundle = analyze(&logs)?;
    let files = write_bundle(&bundle, &args.out)?;
    writeln!(
        out,
        "{} logs analyzed; wrote {}",
        logs.len(),
        files.join(", ")
    )?;
    writeln!(
        out,
        "family       config                           contrast  W       p_raw     p_adj     d"
    )?;
    for r in &bundle.contrasts {
        writeln!(
            out,
            "{:<12} {:<32} {:<9} {:<7.1} {:<9.3e} {:<9.3e} {}",
            r.family,
            r.config,
            r.contrast,
            r.statistic,
            r.p_raw,
            r.p_adjusted.unwrap_or(f64::NAN),
            r.effect_d
                .map_or("undefined".to_string(), |d| format!("{d:.2}"))
        )?;
    }
    Ok(())
}

fn pairs_cmd(args: &DirArgs, out: &mut dyn Write) -> Result<()> {
    let logs = load_logs(&args.logs)?;
    let rows = textscan_rows(&logs);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_csv(&args.out, &logs_hash(&logs), &rows)?;
    let pairs: usize = rows.iter().map(|r| r.n_pairs).sum();
    writeln!(
        out,
        "{} logs, {} contrastive pairs; wrote {}",
        rows.len(),
        pairs,
        args.out.display()
    )?;
    Ok(())
}

fn figdata(args: &FigArgs, out: &mut dyn Write) -> Result<()> {
    let logs = load_logs(&args.logs)?;
    let files = export_figdata(&logs, &args.out, args.stride)?;
    writeln!(out, "wrote {}", files.join(", "))?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(a) => run(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Calibrate(a) => calibrate(a, out),
        Command::Analyze(a) => analyze_cmd(a, out),
        Command::Pairs(a) => pairs_cmd(a, out),
        Command::ExportFigdata(a) => figdata(a, out),
    }
}
