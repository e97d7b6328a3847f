use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::FKM_DELTA;
use crate::costmodel::{
    stream_rng, AgentProfile, ArenaConfig, EdgeEnvironment, Position, ProcessingSource, ProcessingTrace, RadioParams,
    Stream, DEFAULT_DATA_BITS,
};
use crate::error::{Error, Result};
use crate::model::{Allocation, DEFAULT_DOMAIN_FLOOR, DEFAULT_TOLERANCE};

pub const SCHEMA_VERSION: u32 = 1;

/// The seven allocation policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Equal,
    #[default]
    Dora,
    OgdOmm,
    Omd,
    Fkm,
    Ocg,
    DynamicOpt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Equal,
        Algorithm::Dora,
        Algorithm::OgdOmm,
        Algorithm::Omd,
        Algorithm::Fkm,
        Algorithm::Ocg,
        Algorithm::DynamicOpt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Equal => "equal",
            Algorithm::Dora => "dora",
            Algorithm::OgdOmm => "ogd-omm",
            Algorithm::Omd => "omd",
            Algorithm::Fkm => "fkm",
            Algorithm::Ocg => "ocg",
            Algorithm::DynamicOpt => "dynamic-opt",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}`; valid names: {}", Self::valid_names())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessingSpec {
    /// Per-agent base drawn uniformly from `[base_min_s, base_max_s]`, plus
    /// half-normal jitter of scale `jitter_s` every round.
    Stochastic {
        base_min_s: f64,
        base_max_s: f64,
        jitter_s: f64,
    },
    /// `round,agent,delay_s` CSV; relative paths resolve against the config
    /// file's directory.
    Trace { path: PathBuf },
}

impl Default for ProcessingSpec {
    fn default() -> Self {
        Self::Stochastic {
            base_min_s: 0.1,
            base_max_s: 0.5,
            jitter_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSetup {
    pub data_size_bits: f64,
    pub velocity_mps: f64,
    /// Uniform placement in the arena when absent.
    pub positions: Option<Vec<Position>>,
    pub processing: ProcessingSpec,
}

impl Default for AgentSetup {
    fn default() -> Self {
        Self {
            data_size_bits: DEFAULT_DATA_BITS,
            velocity_mps: 0.0,
            positions: None,
            processing: ProcessingSpec::default(),
        }
    }
}

/// Everything needed to reproduce one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub num_agents: usize,
    pub horizon: usize,
    pub step_size: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub bisection_tol: f64,
    pub domain_floor: f64,
    /// Runtime verification of the lemma and regret-bound properties.
    pub checks: bool,
    /// Wall-clock policy timing. Off by default so outputs are reproducible
    /// byte for byte.
    pub record_policy_time: bool,
    pub initial_allocation: Option<Vec<f64>>,
    /// Entropic regularization weight for OMD; `1 / step_size` when absent.
    pub omd_weight: Option<f64>,
    pub fkm_delta: f64,
    pub radio: RadioParams,
    pub arena: ArenaConfig,
    pub agents: AgentSetup,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            num_agents: 5,
            horizon: 470,
            step_size: 0.02,
            algorithm: Algorithm::Dora,
            seed: 0,
            bisection_tol: DEFAULT_TOLERANCE,
            domain_floor: DEFAULT_DOMAIN_FLOOR,
            checks: true,
            record_policy_time: false,
            initial_allocation: None,
            omd_weight: None,
            fkm_delta: FKM_DELTA,
            radio: RadioParams::default(),
            arena: ArenaConfig::default(),
            agents: AgentSetup::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a TOML config; a relative trace path is resolved
    /// against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let ProcessingSpec::Trace { path: trace } = &mut cfg.agents.processing {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.num_agents == 0 {
            return bad("num_agents must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.step_size > 0.0 && self.step_size < 1.0) {
            return bad(format!("step_size must lie in (0, 1), got {}", self.step_size));
        }
        if !(self.bisection_tol > 0.0) {
            return bad(format!("bisection_tol must be positive, got {}", self.bisection_tol));
        }
        if !(self.domain_floor >= 0.0 && self.domain_floor * (self.num_agents as f64) < 1.0) {
            return bad(format!("domain_floor {} leaves no room for {} agents", self.domain_floor, self.num_agents));
        }
        if !(self.fkm_delta > 0.0) {
            return bad(format!("fkm_delta must be positive, got {}", self.fkm_delta));
        }
        if let Some(w) = self.omd_weight {
            if !(w > 0.0) {
                return bad(format!("omd_weight must be positive, got {w}"));
            }
        }
        if let Some(init) = &self.initial_allocation {
            if init.len() != self.num_agents {
                return bad(format!("initial_allocation has {} entries for {} agents", init.len(), self.num_agents));
            }
            Allocation::new(init.clone())?;
            if init.iter().any(|&x| x < self.domain_floor) {
                return bad("initial_allocation has a share below domain_floor".into());
            }
        }
        self.radio.validate()?;
        self.arena.validate()?;
        let a = &self.agents;
        if !(a.data_size_bits > 0.0) {
            return bad(format!("data_size_bits must be positive, got {}", a.data_size_bits));
        }
        if !(a.velocity_mps >= 0.0) {
            return bad(format!("velocity_mps must be non-negative, got {}", a.velocity_mps));
        }
        if let Some(pos) = &a.positions {
            if pos.len() != self.num_agents {
                return bad(format!("{} positions given for {} agents", pos.len(), self.num_agents));
            }
            if let Some(p) = pos.iter().find(|p| !self.arena.contains(p)) {
                return bad(format!("position ({}, {}) lies outside the arena", p.x, p.y));
            }
        }
        if let ProcessingSpec::Stochastic {
            base_min_s,
            base_max_s,
            jitter_s,
        } = a.processing
        {
            if !(base_min_s >= 0.0 && base_max_s >= base_min_s && jitter_s >= 0.0) {
                return bad("processing needs 0 <= base_min_s <= base_max_s and jitter_s >= 0".into());
            }
        }
        Ok(())
    }

    pub fn initial(&self) -> Result<Allocation> {
        match &self.initial_allocation {
            Some(v) => Allocation::new(v.clone()),
            None => Allocation::equal(self.num_agents),
        }
    }

    /// Agent profiles drawn from the placement stream of `seed`.
    pub fn agent_profiles(&self) -> Result<Vec<AgentProfile>> {
        let trace = match &self.agents.processing {
            ProcessingSpec::Trace { path } => {
                let t = ProcessingTrace::from_path(path)?;
                if t.num_agents() != self.num_agents {
                    return Err(Error::Trace(format!(
                        "trace covers {} agents, config has {}",
                        t.num_agents(),
                        self.num_agents
                    )));
                }
                if t.num_rounds() < self.horizon {
                    return Err(Error::TraceExhausted {
                        round: t.num_rounds(),
                        agent: 0,
                    });
                }
                Some(t)
            }
            ProcessingSpec::Stochastic { .. } => None,
        };
        (0..self.num_agents)
            .map(|i| {
                use rand::Rng;
                let mut rng = stream_rng(self.seed, Stream::Placement, i as u64);
                let sampled = self.arena.sample(&mut rng);
                let position = self.agents.positions.as_ref().map_or(sampled, |p| p[i]);
                let processing = match (&self.agents.processing, &trace) {
                    (_, Some(t)) => t.source(i).expect("agent count checked"),
                    (
                        ProcessingSpec::Stochastic {
                            base_min_s,
                            base_max_s,
                            jitter_s,
                        },
                        None,
                    ) => ProcessingSource::Stochastic {
                        base_s: if base_max_s > base_min_s {
                            rng.random_range(*base_min_s..*base_max_s)
                        } else {
                            *base_min_s
                        },
                        jitter_s: *jitter_s,
                    },
                    (ProcessingSpec::Trace { .. }, None) => unreachable!(),
                };
                Ok(AgentProfile {
                    data_size_bits: self.agents.data_size_bits,
                    position,
                    velocity_nominal: self.agents.velocity_mps,
                    processing,
                })
            })
            .collect()
    }

    pub fn environment(&self) -> Result<EdgeEnvironment> {
        EdgeEnvironment::new(
            self.radio.clone(),
            self.arena.clone(),
            self.agent_profiles()?,
            self.domain_floor,
            self.seed,
        )
    }

    /// Perturbation radius actually used by FKM: the configured value, capped
    /// so the shrunk set keeps room around the equal split.
    pub fn effective_fkm_delta(&self) -> f64 {
        let n = self.num_agents as f64;
        self.fkm_delta.min(0.5 / (n + n.sqrt()))
    }

    pub fn effective_omd_weight(&self) -> f64 {
        self.omd_weight.unwrap_or(1.0 / self.step_size)
    }
}
