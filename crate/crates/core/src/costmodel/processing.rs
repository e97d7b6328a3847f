use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Where an agent's per-round processing time comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessingSource {
    /// `base + |N(0, jitter^2)|`, seconds.
    Stochastic { base_s: f64, jitter_s: f64 },
    /// Round-indexed measurements, seconds.
    Trace(Arc<[f64]>),
}

impl ProcessingSource {
    pub fn constant(base_s: f64) -> Self {
        Self::Stochastic { base_s, jitter_s: 0.0 }
    }

    /// Expected delay of the stochastic model.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Stochastic { base_s, jitter_s } => base_s + jitter_s * (2.0 / std::f64::consts::PI).sqrt(),
            Self::Trace(v) => v.iter().sum::<f64>() / v.len().max(1) as f64,
        }
    }
}

/// Processing delay of `agent` in the zero-based `round`.
pub fn processing_delay<R: Rng + ?Sized>(
    source: &ProcessingSource,
    agent: usize,
    round: usize,
    rng: &mut R,
) -> Result<f64> {
    match source {
        ProcessingSource::Stochastic { base_s, jitter_s } => {
            if *jitter_s == 0.0 {
                return Ok(*base_s);
            }
            let z: f64 = rng.sample(StandardNormal);
            Ok((base_s + jitter_s * z.abs()).max(0.0))
        }
        ProcessingSource::Trace(values) => values
            .get(round)
            .copied()
            .ok_or(Error::TraceExhausted { round, agent }),
    }
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    round: usize,
    agent: usize,
    delay_s: f64,
}

/// Per-agent processing delays ingested from a `round,agent,delay_s` CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessingTrace {
    per_agent: Vec<Arc<[f64]>>,
}

impl ProcessingTrace {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Trace(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    /// Rows may come in any order but must cover every `(round, agent)` pair
    /// of a dense zero-based grid exactly once.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["round", "agent", "delay_s"] {
            return Err(Error::Trace(format!(
                "expected header round,agent,delay_s, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut grid: Vec<Vec<Option<f64>>> = Vec::new();
        for row in rdr.deserialize() {
            let row: TraceRow = row?;
            if !(row.delay_s >= 0.0) || !row.delay_s.is_finite() {
                return Err(Error::Trace(format!(
                    "negative or invalid delay {} at round {}, agent {}",
                    row.delay_s, row.round, row.agent
                )));
            }
            if grid.len() <= row.agent {
                grid.resize(row.agent + 1, Vec::new());
            }
            let series = &mut grid[row.agent];
            if series.len() <= row.round {
                series.resize(row.round + 1, None);
            }
            if series[row.round].replace(row.delay_s).is_some() {
                return Err(Error::Trace(format!(
                    "duplicate entry for round {}, agent {}",
                    row.round, row.agent
                )));
            }
        }
        if grid.is_empty() {
            return Err(Error::Trace("trace is empty".into()));
        }
        let rounds = grid.iter().map(Vec::len).max().unwrap_or(0);
        let per_agent = grid
            .into_iter()
            .enumerate()
            .map(|(agent, series)| {
                if series.len() != rounds {
                    return Err(Error::TraceExhausted {
                        round: series.len(),
                        agent,
                    });
                }
                series
                    .into_iter()
                    .enumerate()
                    .map(|(round, v)| v.ok_or(Error::TraceExhausted { round, agent }))
                    .collect::<Result<Vec<f64>>>()
                    .map(Arc::from)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_agent })
    }

    pub fn num_agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn num_rounds(&self) -> usize {
        self.per_agent.first().map_or(0, |s| s.len())
    }

    pub fn source(&self, agent: usize) -> Option<ProcessingSource> {
        self.per_agent.get(agent).cloned().map(ProcessingSource::Trace)
    }
}
