use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn mgsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgsim"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_writes_one_log_per_run_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = mgsim(&[
        "sweep",
        "--conditions",
        "A,B",
        "--seeds",
        "20",
        "--policy",
        "scripted:delta=10",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let logs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "jsonl")
        })
        .count();
    assert_eq!(logs, 40);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 40);
}

#[test]
fn analyze_on_null_logs_finds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let tables = dir.path().join("tables");
    let o = mgsim(&[
        "sweep",
        "--conditions",
        "A,B,C",
        "--seeds",
        "12",
        "--policy",
        "scripted:delta=0",
        "--out",
        s(&logs),
    ]);
    assert!(o.status.success());
    let o = mgsim(&["analyze", "--logs", s(&logs), "--out", s(&tables)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(tables.join("contrasts.csv"))
        .unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "p_adjusted").unwrap();
    let mut n = 0;
    for row in rdr.records() {
        let p: f64 = row.unwrap()[col].parse().unwrap();
        assert!(p >= 0.05, "{p}");
        n += 1;
    }
    assert_eq!(n, 2);
    for f in [
        "run_metrics.csv",
        "action_distribution.csv",
        "adjacency.csv",
        "textscan.csv",
    ] {
        let text = std::fs::read_to_string(tables.join(f)).unwrap();
        assert!(text.starts_with("# config_hash="), "{f}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[simulation]\nn_agents = 20\nbogus_key = 1\n").unwrap();
    let o = mgsim(&[
        "run",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));

    let o = mgsim(&[
        "run",
        "--policy",
        "scripted:nonsense=3",
        "--out",
        s(&dir.path().join("y.jsonl")),
    ]);
    assert!(!o.status.success());
}

#[test]
fn config_file_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "[simulation]\nn_turns = 120\ncondition = \"D\"\nseed = 4\n\n[policy]\nkind = \"scripted\"\ndelta_pp = 6.0\n",
    )
    .unwrap();
    let log = dir.path().join("run.jsonl");
    let o = mgsim(&["run", "--config", s(&cfg), "--out", s(&log)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&log).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["condition"], "D");
    assert_eq!(first["seed"], 4);
    assert_eq!(text.lines().count(), 122);
}

#[test]
fn quick_calibration_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.csv");
    let start = Instant::now();
    let o = mgsim(&["calibrate", "--quick", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed() < Duration::from_secs(60));
    let rows = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count();
    assert_eq!(rows, 4);
}

#[test]
fn pairs_and_figdata_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let o = mgsim(&[
        "sweep",
        "--conditions",
        "B",
        "--seeds",
        "3",
        "--turns",
        "200",
        "--policy",
        "scripted:delta=10,mention_in=0.3,mention_out=0.1",
        "--out",
        s(&logs),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pairs = dir.path().join("pairs.csv");
    assert!(mgsim(&["pairs", "--logs", s(&logs), "--out", s(&pairs)])
        .status
        .success());
    assert!(pairs.exists());
    let fig = dir.path().join("fig");
    assert!(mgsim(&[
        "export-figdata",
        "--logs",
        s(&logs),
        "--out",
        s(&fig),
        "--stride",
        "50"
    ])
    .status
    .success());
    assert!(std::fs::read_dir(&fig).unwrap().count() >= 5);
}
