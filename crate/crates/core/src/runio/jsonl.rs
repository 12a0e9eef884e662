use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunIoError;
use crate::model::{RunLog, SimulationConfig, TrustMatrix, TurnRecord};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FinalLine {
    final_trust: TrustMatrix,
}

/// Line 1 is the config, then one line per turn, then `{"final_trust": ...}`.
pub fn write_runlog_to<W: Write>(log: &RunLog, out: W) -> Result<(), RunIoError> {
    let mut w = BufWriter::new(out);
    serde_json::to_writer(&mut w, &log.config)?;
    w.write_all(b"\n")?;
    for rec in &log.records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(
        &mut w,
        &FinalLine {
            final_trust: log.final_trust.clone(),
        },
    )?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_runlog(log: &RunLog, path: &Path) -> Result<(), RunIoError> {
    let file = File::create(path).map_err(|e| RunIoError::io(path, e))?;
    write_runlog_to(log, file)
}

pub fn read_runlog_from<R: BufRead>(input: R) -> Result<RunLog, RunIoError> {
    let mut config: Option<SimulationConfig> = None;
    let mut records = Vec::new();
    let mut final_trust = None;
    let mut last_good = 0;
    for (k, line) in input.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if final_trust.is_some() {
            return Err(RunIoError::Format {
                line: line_no,
                message: "content after the final trust line".into(),
            });
        }
        let bad = |e: serde_json::Error| RunIoError::Format {
            line: line_no,
            message: e.to_string(),
        };
        if config.is_none() {
            config = Some(serde_json::from_str(&line).map_err(bad)?);
        } else if line.starts_with("{\"final_trust\"") {
            let f: FinalLine = serde_json::from_str(&line).map_err(bad)?;
            final_trust = Some(f.final_trust);
        } else {
            records.push(serde_json::from_str::<TurnRecord>(&line).map_err(bad)?);
        }
        last_good = line_no;
    }
    let config = config.ok_or(RunIoError::Truncated { last_good_line: 0 })?;
    let final_trust = final_trust.ok_or(RunIoError::Truncated {
        last_good_line: last_good,
    })?;
    Ok(RunLog {
        config,
        records,
        final_trust,
    })
}

pub fn read_runlog(path: &Path) -> Result<RunLog, RunIoError> {
    let file = File::open(path).map_err(|e| RunIoError::io(path, e))?;
    read_runlog_from(BufReader::new(file)).map_err(|e| e.in_file(path))
}
