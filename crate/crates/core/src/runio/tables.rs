use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{combined_hash, config_hash, RunIoError};
use crate::metrics::{
    action_counts, bias_time_series, mean_adjacency, pooled_action_distribution, run_metrics,
    RunMetrics,
};
use crate::model::{ActionType, Condition, RunLog};
use crate::stats::{
    chi_square_independence, pipeline_condition_contrast, Contrast, MetricTable, Side, StatResult,
    TestFamily,
};
use crate::textscan::{
    extract_contrastive_pairs_with, mention_rate, pair_asymmetry, Tier, TierPattern,
};

/// Writes `# config_hash=<hash>`, then a CSV header and rows.
pub fn write_csv<T: Serialize>(path: &Path, hash: &str, rows: &[T]) -> Result<(), RunIoError> {
    let mut file = File::create(path).map_err(|e| RunIoError::io(path, e))?;
    writeln!(file, "# config_hash={hash}").map_err(|e| RunIoError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| RunIoError::io(path, e))?;
    Ok(())
}

/// Group key for runs that differ only in condition and seed.
pub fn config_key(log: &RunLog) -> String {
    log.config.policy_label.clone()
}

pub fn logs_hash(logs: &[RunLog]) -> String {
    let hashes: Vec<String> = logs.iter().map(|l| config_hash(&l.config)).collect();
    combined_hash(hashes.iter().map(String::as_str))
}

fn grouped(logs: &[RunLog]) -> BTreeMap<(String, Condition), Vec<&RunLog>> {
    let mut out: BTreeMap<(String, Condition), Vec<&RunLog>> = BTreeMap::new();
    for l in logs {
        out.entry((config_key(l), l.config.condition))
            .or_default()
            .push(l);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetricsRow {
    pub config: String,
    #[serde(skip)]
    pub metrics: RunMetrics,
}

/// Flat CSV form of [`RunMetricsRow`].
#[derive(Serialize)]
struct RunMetricsCsv<'a> {
    config: &'a str,
    condition: Condition,
    seed: u64,
    mean_bias: f64,
    homophily: Option<f64>,
    assortativity: Option<f64>,
    n_edges: usize,
    n_enforced: usize,
    r_attempt: Option<f64>,
    policy_errors: usize,
}

impl RunMetricsRow {
    fn csv(&self) -> RunMetricsCsv<'_> {
        let m = &self.metrics;
        RunMetricsCsv {
            config: &self.config,
            condition: m.condition,
            seed: m.seed,
            mean_bias: m.mean_bias,
            homophily: m.homophily,
            assortativity: m.assortativity,
            n_edges: m.n_edges,
            n_enforced: m.n_enforced,
            r_attempt: m.r_attempt,
            policy_errors: m.policy_errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRow {
    pub config: String,
    pub condition: Condition,
    pub action: ActionType,
    pub in_group_pct: f64,
    pub out_group_pct: f64,
    pub delta_pp: Option<f64>,
    pub n_in_group: usize,
    pub n_out_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareRow {
    pub config: String,
    pub contrast: String,
    pub chi2: Option<f64>,
    pub df: Option<usize>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencyCell {
    pub config: String,
    pub condition: Condition,
    pub row: usize,
    pub col: usize,
    pub row_agent: String,
    pub col_agent: String,
    pub mean_trust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencySummary {
    pub config: String,
    pub condition: Condition,
    pub t_in: f64,
    pub t_out: f64,
    pub delta: f64,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TextscanRow {
    pub config: String,
    pub condition: Condition,
    pub seed: u64,
    pub tier1_rate: Option<f64>,
    pub tier2_rate: Option<f64>,
    pub n_pairs: usize,
    pub n_ig_only: u64,
    pub n_og_only: u64,
    pub asymmetry_pp: Option<f64>,
    pub mcnemar_chi2: Option<f64>,
    pub mcnemar_p: Option<f64>,
    pub exact_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisBundle {
    pub hash: String,
    pub runs: Vec<RunMetricsRow>,
    pub contrasts: Vec<StatResult>,
    pub distributions: Vec<DistributionRow>,
    pub chi_square: Vec<ChiSquareRow>,
    pub adjacency: Vec<AdjacencyCell>,
    pub adjacency_summary: Vec<AdjacencySummary>,
    pub textscan: Vec<TextscanRow>,
}

/// Confirmatory families available for the conditions present in the logs.
pub fn default_families(configs: &[String], conditions: &BTreeSet<Condition>) -> Vec<TestFamily> {
    let has = |c: Condition| conditions.contains(&c);
    let keep = |pairs: &[(Condition, Condition)]| -> Vec<Contrast> {
        pairs
            .iter()
            .filter(|(a, b)| has(*a) && has(*b))
            .map(|(a, b)| Contrast::new(a.as_str(), b.as_str()))
            .collect()
    };
    let mut families = Vec::new();
    for (name, pairs) in [
        (
            "primary",
            vec![(Condition::A, Condition::B), (Condition::B, Condition::C)],
        ),
        (
            "condition_d",
            vec![
                (Condition::A, Condition::B),
                (Condition::A, Condition::D),
                (Condition::D, Condition::B),
            ],
        ),
    ] {
        let contrasts = keep(&pairs);
        if contrasts.is_empty() || (name == "condition_d" && !has(Condition::D)) {
            continue;
        }
        families.push(TestFamily {
            name: name.into(),
            configs: configs.to_vec(),
            contrasts,
            side: Side::OneSidedGreater,
        });
    }
    families
}

pub fn textscan_rows(logs: &[RunLog]) -> Vec<TextscanRow> {
    let pattern = TierPattern::new();
    logs.par_iter()
        .map(|l| {
            let pairs = extract_contrastive_pairs_with(l, &pattern, Tier::Tier1);
            let asym = pair_asymmetry(&pairs).ok();
            let test = asym.and_then(|a| a.test);
            TextscanRow {
                config: config_key(l),
                condition: l.config.condition,
                seed: l.config.seed,
                tier1_rate: mention_rate(l, &pattern, Tier::Tier1).rate,
                tier2_rate: mention_rate(l, &pattern, Tier::Tier2).rate,
                n_pairs: pairs.len(),
                n_ig_only: asym.map_or(0, |a| a.n_ig_only),
                n_og_only: asym.map_or(0, |a| a.n_og_only),
                asymmetry_pp: asym.map(|a| a.asymmetry_pp),
                mcnemar_chi2: test.map(|t| t.chi2),
                mcnemar_p: test.map(|t| t.p_chi2),
                exact_p: test.map(|t| t.p_exact),
            }
        })
        .collect()
}

pub fn analyze(logs: &[RunLog]) -> Result<AnalysisBundle, RunIoError> {
    let runs: Vec<RunMetricsRow> = logs
        .par_iter()
        .map(|l| {
            Ok(RunMetricsRow {
                config: config_key(l),
                metrics: run_metrics(l).map_err(|e| RunIoError::Analysis(e.to_string()))?,
            })
        })
        .collect::<Result<_, RunIoError>>()?;

    let mut table = MetricTable::new();
    for r in &runs {
        table.insert(
            &r.config,
            r.metrics.condition.as_str(),
            r.metrics.seed,
            r.metrics.mean_bias,
        );
    }
    let groups = grouped(logs);
    let configs: Vec<String> = groups
        .keys()
        .map(|(c, _)| c.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let conditions: BTreeSet<Condition> = groups.keys().map(|(_, c)| *c).collect();
    let contrasts = pipeline_condition_contrast(&table, &default_families(&configs, &conditions))
        .map_err(|e| RunIoError::Analysis(e.to_string()))?;

    let mut distributions = Vec::new();
    let mut adjacency = Vec::new();
    let mut adjacency_summary = Vec::new();
    for ((config, condition), group) in &groups {
        let d = pooled_action_distribution(group.iter().copied());
        for s in &d.rows {
            distributions.push(DistributionRow {
                config: config.clone(),
                condition: *condition,
                action: s.action,
                in_group_pct: s.in_group_pct,
                out_group_pct: s.out_group_pct,
                delta_pp: s.delta_pp,
                n_in_group: d.n_in_group,
                n_out_group: d.n_out_group,
            });
        }
        let owned: Vec<RunLog> = group.iter().map(|l| (*l).clone()).collect();
        let adj = mean_adjacency(&owned).map_err(|e| RunIoError::Analysis(e.to_string()))?;
        for (r, a) in adj.order.iter().enumerate() {
            for (c, b) in adj.order.iter().enumerate() {
                adjacency.push(AdjacencyCell {
                    config: config.clone(),
                    condition: *condition,
                    row: r,
                    col: c,
                    row_agent: a.to_string(),
                    col_agent: b.to_string(),
                    mean_trust: adj.matrix[r][c],
                });
            }
        }
        adjacency_summary.push(AdjacencySummary {
            config: config.clone(),
            condition: *condition,
            t_in: adj.t_in,
            t_out: adj.t_out,
            delta: adj.delta,
            n_runs: adj.n_runs,
        });
    }

    let mut chi_square = Vec::new();
    for config in &configs {
        for (a, b) in [(Condition::A, Condition::B), (Condition::B, Condition::C)] {
            let (Some(ga), Some(gb)) = (
                groups.get(&(config.clone(), a)),
                groups.get(&(config.clone(), b)),
            ) else {
                continue;
            };
            let pooled = |g: &Vec<&RunLog>| {
                g.iter().fold(vec![0u64; 6], |mut acc, l| {
                    for (x, y) in acc.iter_mut().zip(action_counts(l)) {
                        *x += y;
                    }
                    acc
                })
            };
            let res = chi_square_independence(&[pooled(ga), pooled(gb)]).ok();
            chi_square.push(ChiSquareRow {
                config: config.clone(),
                contrast: format!("{a}->{b}"),
                chi2: res.as_ref().map(|r| r.chi2),
                df: res.as_ref().map(|r| r.df),
                p: res.as_ref().map(|r| r.p),
            });
        }
    }

    Ok(AnalysisBundle {
        hash: logs_hash(logs),
        runs,
        contrasts,
        distributions,
        chi_square,
        adjacency,
        adjacency_summary,
        textscan: textscan_rows(logs),
    })
}

pub fn write_bundle(bundle: &AnalysisBundle, dir: &Path) -> Result<Vec<String>, RunIoError> {
    std::fs::create_dir_all(dir).map_err(|e| RunIoError::io(dir, e))?;
    let h = &bundle.hash;
    let runs: Vec<RunMetricsCsv> = bundle.runs.iter().map(RunMetricsRow::csv).collect();
    write_csv(&dir.join("run_metrics.csv"), h, &runs)?;
    write_csv(&dir.join("contrasts.csv"), h, &bundle.contrasts)?;
    write_csv(
        &dir.join("action_distribution.csv"),
        h,
        &bundle.distributions,
    )?;
    write_csv(&dir.join("chi_square.csv"), h, &bundle.chi_square)?;
    write_csv(&dir.join("adjacency.csv"), h, &bundle.adjacency)?;
    write_csv(
        &dir.join("adjacency_summary.csv"),
        h,
        &bundle.adjacency_summary,
    )?;
    write_csv(&dir.join("textscan.csv"), h, &bundle.textscan)?;
    Ok([
        "run_metrics.csv",
        "contrasts.csv",
        "action_distribution.csv",
        "chi_square.csv",
        "adjacency.csv",
        "adjacency_summary.csv",
        "textscan.csv",
    ]
    .map(String::from)
    .to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapCell {
    pub config: String,
    pub condition: Condition,
    pub mean_bias: f64,
    pub std_bias: f64,
    pub mean_homophily: Option<f64>,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub config: String,
    pub condition: Condition,
    pub turn: usize,
    pub mean_bias: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssortativityBar {
    pub config: String,
    pub condition: Condition,
    pub mean_r: Option<f64>,
    pub std_r: Option<f64>,
    pub n_defined: usize,
    pub n_seeds: usize,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Half-width of a 95% t interval for the mean.
fn ci95(sd: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("df > 0")
        .inverse_cdf(0.975);
    t * sd / (n as f64).sqrt()
}

/// Figure-ready CSVs. Returns the file names written.
pub fn export_figdata(
    logs: &[RunLog],
    dir: &Path,
    stride: usize,
) -> Result<Vec<String>, RunIoError> {
    let bundle = analyze(logs)?;
    std::fs::create_dir_all(dir).map_err(|e| RunIoError::io(dir, e))?;
    let h = &bundle.hash;
    let groups = grouped(logs);

    let mut heat = Vec::new();
    let mut bars = Vec::new();
    for (config, condition) in groups.keys() {
        let rows: Vec<&RunMetrics> = bundle
            .runs
            .iter()
            .filter(|r| &r.config == config && r.metrics.condition == *condition)
            .map(|r| &r.metrics)
            .collect();
        let biases: Vec<f64> = rows.iter().map(|r| r.mean_bias).collect();
        let (m, sd) = mean_sd(&biases);
        let hs: Vec<f64> = rows.iter().filter_map(|r| r.homophily).collect();
        heat.push(HeatmapCell {
            config: config.clone(),
            condition: *condition,
            mean_bias: m,
            std_bias: sd,
            mean_homophily: (!hs.is_empty()).then(|| mean_sd(&hs).0),
            n_seeds: rows.len(),
        });
        let rs: Vec<f64> = rows.iter().filter_map(|r| r.assortativity).collect();
        let stats = (!rs.is_empty()).then(|| mean_sd(&rs));
        bars.push(AssortativityBar {
            config: config.clone(),
            condition: *condition,
            mean_r: stats.map(|s| s.0),
            std_r: stats.map(|s| s.1),
            n_defined: rs.len(),
            n_seeds: rows.len(),
        });
    }

    let mut series = Vec::new();
    for ((config, condition), group) in &groups {
        let per_run = group
            .iter()
            .map(|l| bias_time_series(l, stride))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| RunIoError::Analysis(e.to_string()))?;
        let mut by_turn: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for s in &per_run {
            for &(t, b) in s {
                by_turn.entry(t).or_default().push(b);
            }
        }
        for (turn, xs) in by_turn {
            let (m, sd) = mean_sd(&xs);
            let half = ci95(sd, xs.len());
            series.push(SeriesPoint {
                config: config.clone(),
                condition: *condition,
                turn,
                mean_bias: m,
                ci_low: m - half,
                ci_high: m + half,
                n_seeds: xs.len(),
            });
        }
    }

    write_csv(&dir.join("bias_heatmap.csv"), h, &heat)?;
    write_csv(&dir.join("bias_timeseries.csv"), h, &series)?;
    write_csv(&dir.join("assortativity_bars.csv"), h, &bars)?;
    write_csv(
        &dir.join("action_distribution.csv"),
        h,
        &bundle.distributions,
    )?;
    write_csv(&dir.join("adjacency.csv"), h, &bundle.adjacency)?;
    write_csv(
        &dir.join("adjacency_summary.csv"),
        h,
        &bundle.adjacency_summary,
    )?;
    Ok([
        "bias_heatmap.csv",
        "bias_timeseries.csv",
        "assortativity_bars.csv",
        "action_distribution.csv",
        "adjacency.csv",
        "adjacency_summary.csv",
    ]
    .map(String::from)
    .to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_simulation;
    use crate::model::SimulationConfig;
    use crate::policies::{ScriptedParams, ScriptedPolicy};

    fn logs() -> Vec<RunLog> {
        let mut out = Vec::new();
        for cond in [Condition::A, Condition::B, Condition::C] {
            for seed in 0..4 {
                let config = SimulationConfig {
                    n_turns: 80,
                    condition: cond,
                    seed,
                    policy_label: "scripted:delta=10".into(),
                    ..SimulationConfig::default()
                };
                let mut p = ScriptedPolicy::new(ScriptedParams::with_delta(10.0))
                    .unwrap()
                    .with_mentions(0.3, 0.1);
                out.push(run_simulation(&config, &mut p).unwrap());
            }
        }
        out
    }

    #[test]
    fn bundle_shapes() {
        let logs = logs();
        let b = analyze(&logs).unwrap();
        assert_eq!(b.runs.len(), 12);
        assert_eq!(b.contrasts.len(), 2);
        assert_eq!(b.distributions.len(), 18);
        assert_eq!(b.adjacency.len(), 3 * 400);
        assert_eq!(b.chi_square.len(), 2);
        assert_eq!(b.textscan.len(), 12);
    }

    #[test]
    fn csvs_regenerate_identically() {
        let logs = logs();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let names = write_bundle(&analyze(&logs).unwrap(), a.path()).unwrap();
        write_bundle(&analyze(&logs).unwrap(), b.path()).unwrap();
        for n in &names {
            let x = std::fs::read_to_string(a.path().join(n)).unwrap();
            assert!(x.starts_with("# config_hash="), "{n}");
            assert_eq!(x.lines().nth(1).map(|l| l.contains(',')), Some(true));
            assert_eq!(x, std::fs::read_to_string(b.path().join(n)).unwrap());
        }
        let figs = export_figdata(&logs, a.path(), 20).unwrap();
        assert_eq!(figs.len(), 6);
        let ts = std::fs::read_to_string(a.path().join("bias_timeseries.csv")).unwrap();
        // turns 0, 20, 40, 60, 80 for each of three conditions
        assert_eq!(ts.lines().count(), 2 + 15);
    }

    #[test]
    fn families_follow_conditions() {
        let configs = vec!["m".to_string()];
        let abc: BTreeSet<Condition> = [Condition::A, Condition::B, Condition::C].into();
        let f = default_families(&configs, &abc);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].contrasts.len(), 2);
        let abd: BTreeSet<Condition> = [Condition::A, Condition::B, Condition::D].into();
        let f = default_families(&configs, &abd);
        assert_eq!(f.len(), 2);
        assert_eq!(f[1].contrasts.len(), 3);
    }
}
