//! Run persistence: a JSON document with the config echo and all round
//! records, and a long-format CSV keyed by algorithm.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{RunResult, RunSummary, RoundRecord, ScenarioConfig};
use crate::error::Result;

pub const CSV_FIXED_COLUMNS: [&str; 8] = [
    "t",
    "algorithm",
    "global_cost",
    "oracle_cost",
    "regret_cum",
    "path_length_cum",
    "straggler",
    "policy_time_s",
];

pub fn csv_header(num_agents: usize) -> Vec<String> {
    CSV_FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..num_agents).map(|i| format!("x_{i}")))
        .collect()
}

/// Writes the round records of every run, one row per round and run.
pub fn write_csv<W: Write>(writer: W, num_agents: usize, runs: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(num_agents))?;
    for run in runs {
        for r in &run.records {
            w.write_record(csv_row(&run.summary.algorithm, r))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_row(algorithm: &str, r: &RoundRecord) -> Vec<String> {
    let mut row = vec![
        r.t.to_string(),
        algorithm.to_string(),
        r.global_cost.to_string(),
        r.oracle_cost.to_string(),
        r.regret_cum.to_string(),
        r.path_length_cum.to_string(),
        r.straggler.to_string(),
        r.policy_time_s.to_string(),
    ];
    row.extend(r.allocation.iter().map(f64::to_string));
    row
}

#[derive(Serialize)]
struct RunDocument<'a> {
    config: &'a ScenarioConfig,
    runs: Vec<RunView<'a>>,
}

#[derive(Serialize)]
struct RunView<'a> {
    summary: &'a RunSummary,
    records: &'a [RoundRecord],
}

pub fn write_json<W: Write>(writer: W, config: &ScenarioConfig, runs: &[RunResult]) -> Result<()> {
    let doc = RunDocument {
        config,
        runs: runs
            .iter()
            .map(|r| RunView {
                summary: &r.summary,
                records: &r.records,
            })
            .collect(),
    };
    let mut writer = std::io::BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut writer, &doc)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Writes `<prefix>.json` and `<prefix>.csv`.
pub fn write_run_files(prefix: &Path, config: &ScenarioConfig, runs: &[RunResult]) -> Result<()> {
    let json = std::fs::File::create(with_suffix(prefix, "json"))?;
    write_json(json, config, runs)?;
    let csv = std::fs::File::create(with_suffix(prefix, "csv"))?;
    write_csv(std::io::BufWriter::new(csv), config.num_agents, runs)
}

/// `prefix` with `.ext` appended, or replaced if it already carries `.json`
/// or `.csv`.
pub fn with_suffix(prefix: &Path, ext: &str) -> std::path::PathBuf {
    match prefix.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("csv") => prefix.with_extension(ext),
        _ => {
            let mut s = prefix.as_os_str().to_owned();
            s.push(".");
            s.push(ext);
            s.into()
        }
    }
}
