use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dora_core::sim::{run_algorithm, Algorithm, ScenarioConfig, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParam {
    BandwidthTotal,
    VelocityNominal,
    NumAgents,
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweptParam::BandwidthTotal => "bandwidth_total",
            SweptParam::VelocityNominal => "velocity_nominal",
            SweptParam::NumAgents => "num_agents",
        })
    }
}

/// A parameter sweep: every value x repetition x policy is one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema_version: u32,
    pub param: SweptParam,
    pub values: Vec<f64>,
    pub policies: Vec<String>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Repetition `r` uses seed `base_seed + r`, shared by every policy.
    #[serde(default)]
    pub base_seed: u64,
    /// Base scenario file, relative to the sweep file.
    #[serde(default)]
    pub scenario_path: Option<PathBuf>,
    /// Inline base scenario; mutually exclusive with `scenario_path`.
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    /// Optional partial scenario tables, one per entry of `values`, merged
    /// onto the base scenario before the swept parameter is set.
    #[serde(default)]
    pub overrides: Option<Vec<toml::Table>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweptParam,
    pub value: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub avg_regret: f64,
    pub total_policy_time_s: f64,
    pub check_failures: usize,
}

impl SweepSpec {
    pub fn from_path(path: &Path) -> Result<(Self, ScenarioConfig)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let spec: SweepSpec = toml::from_str(&text).with_context(|| format!("invalid sweep file {}", path.display()))?;
        let base = match (&spec.scenario_path, &spec.scenario) {
            (Some(_), Some(_)) => bail!("give either scenario_path or [scenario], not both"),
            (Some(p), None) => {
                let p = path.parent().map_or(p.clone(), |dir| dir.join(p));
                ScenarioConfig::from_path(&p)?
            }
            (None, Some(s)) => {
                s.validate()?;
                s.clone()
            }
            (None, None) => ScenarioConfig::default(),
        };
        spec.validate()?;
        Ok((spec, base))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        ensure!(!self.values.is_empty(), "sweep needs at least one value");
        ensure!(self.repetitions >= 1, "repetitions must be at least 1");
        ensure!(!self.policies.is_empty(), "sweep needs at least one policy");
        if let Some(o) = &self.overrides {
            ensure!(
                o.len() == self.values.len(),
                "overrides has {} entries for {} values",
                o.len(),
                self.values.len()
            );
        }
        self.algorithms()?;
        Ok(())
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        self.policies
            .iter()
            .map(|p| p.parse::<Algorithm>().map_err(anyhow::Error::from))
            .collect()
    }

    /// All cells in output order: value, then repetition, then policy.
    pub fn cells(&self, base: &ScenarioConfig) -> Result<Vec<SweepCell>> {
        let algorithms = self.algorithms()?;
        let mut cells = Vec::new();
        for (k, &value) in self.values.iter().enumerate() {
            let mut cfg = match self.overrides.as_ref().map(|o| &o[k]) {
                Some(table) => merged(base, table).with_context(|| format!("overrides for {} = {value}", self.param))?,
                None => base.clone(),
            };
            apply(&mut cfg, self.param, value)?;
            for rep in 0..self.repetitions {
                let seed = self.base_seed + rep as u64;
                let mut cfg = cfg.clone();
                cfg.seed = seed;
                cfg.record_policy_time = true;
                cfg.validate()
                    .with_context(|| format!("{} = {value} gives an invalid scenario", self.param))?;
                for &algorithm in &algorithms {
                    cells.push(SweepCell {
                        value,
                        seed,
                        algorithm,
                        config: cfg.clone(),
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// `base` with the keys of `table` replaced, recursing into sub-tables.
fn merged(base: &ScenarioConfig, table: &toml::Table) -> Result<ScenarioConfig> {
    fn merge(into: &mut toml::Table, from: &toml::Table) {
        for (key, value) in from {
            match (into.get_mut(key), value) {
                (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => merge(dst, src),
                _ => {
                    into.insert(key.clone(), value.clone());
                }
            }
        }
    }
    let mut doc = toml::Table::try_from(base)?;
    merge(&mut doc, table);
    Ok(doc.try_into()?)
}

fn apply(cfg: &mut ScenarioConfig, param: SweptParam, value: f64) -> Result<()> {
    match param {
        SweptParam::BandwidthTotal => cfg.radio.bandwidth_hz = value,
        SweptParam::VelocityNominal => cfg.agents.velocity_mps = value,
        SweptParam::NumAgents => {
            ensure!(
                value >= 1.0 && value.fract() == 0.0,
                "num_agents values must be positive integers, got {value}"
            );
            ensure!(
                cfg.agents.positions.is_none() && cfg.initial_allocation.is_none(),
                "sweeping num_agents requires a scenario without fixed positions or initial allocation"
            );
            cfg.num_agents = value as usize;
        }
    }
    Ok(())
}

/// Runs every cell, at most `jobs` at a time; rows keep the cell order.
pub fn run_cells(param: SweptParam, cells: &[SweepCell], jobs: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let res = run_algorithm(&cell.config, cell.algorithm)
                    .with_context(|| format!("{param} = {}, seed {}, {}", cell.value, cell.seed, cell.algorithm))?;
                Ok(SweepRow {
                    param,
                    value: cell.value,
                    algorithm: cell.algorithm,
                    seed: cell.seed,
                    avg_regret: res.summary.tail_average_regret,
                    total_policy_time_s: res.summary.total_policy_time_s,
                    check_failures: res.summary.check_failures,
                })
            })
            .collect()
    })
}

pub const SWEEP_HEADER: &str = "param,value,algorithm,seed,avg_regret,total_policy_time_s";

pub fn write_rows<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.param, r.value, r.algorithm, r.seed, r.avg_regret, r.total_policy_time_s
        )?;
    }
    w.flush()?;
    Ok(())
}
