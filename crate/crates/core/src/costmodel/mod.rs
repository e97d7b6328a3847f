//! Edge-learning delay model.
//!
//! An agent's round latency is the Shannon-rate upload time of its model
//! update over its bandwidth share plus a share-independent processing time:
//! `f(x) = d / (x B log2(1 + g p / sigma^2)) + f_P`. Channel gains follow a
//! log-distance path loss from the parameter server, and agents wander the
//! arena under the random waypoint model.

mod mobility;
mod processing;
mod radio;

pub use mobility::{draw_speed, waypoint_step, ArenaConfig, Position, Waypoint};
pub use processing::{processing_delay, ProcessingSource, ProcessingTrace};
pub use radio::{channel_gain, comm_delay, noise_power, spectral_efficiency, RadioParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::CostFunction;

/// Model update size: 0.35 MB with MB = 10^6 bytes.
pub const DEFAULT_DATA_BITS: f64 = 0.35e6 * 8.0;

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Mobility = 2,
    Processing = 3,
    Policy = 4,
}

/// Deterministic generator for `(seed, stream, index)`; agents get disjoint
/// streams so generation order between agents does not matter.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    pub data_size_bits: f64,
    pub position: Position,
    /// Nominal random-waypoint speed `v`, m/s.
    pub velocity_nominal: f64,
    pub processing: ProcessingSource,
}

impl AgentProfile {
    pub fn validate(&self, arena: &ArenaConfig) -> Result<()> {
        if !(self.data_size_bits > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "data size must be positive, got {}",
                self.data_size_bits
            )));
        }
        if !arena.contains(&self.position) {
            return Err(Error::InvalidParameter(format!(
                "agent position ({}, {}) lies outside the arena",
                self.position.x, self.position.y
            )));
        }
        if !(self.velocity_nominal >= 0.0) {
            return Err(Error::InvalidParameter("velocity must be non-negative".into()));
        }
        Ok(())
    }
}

/// Upload time at the full band, `d / (B log2(1 + SNR))`. Agents closer than
/// the reference distance are evaluated at it.
pub fn full_band_delay(data_bits: f64, distance: f64, radio: &RadioParams) -> Result<f64> {
    let gain = channel_gain(radio, distance.max(radio.ref_distance_m))?;
    comm_delay(data_bits, 1.0, radio, gain)
}

/// Per-agent delay functions `x -> c_i / x + f_P,i` for one round.
pub fn make_round_costs(
    profiles: &[AgentProfile],
    radio: &RadioParams,
    arena: &ArenaConfig,
    processing_delays: &[f64],
    floor: f64,
) -> Result<Vec<CostFunction>> {
    if profiles.len() != processing_delays.len() {
        return Err(Error::DimensionMismatch {
            expected: profiles.len(),
            found: processing_delays.len(),
        });
    }
    let server = arena.server();
    profiles
        .iter()
        .zip(processing_delays)
        .map(|(p, &fp)| {
            let c = full_band_delay(p.data_size_bits, p.position.distance(&server), radio)?;
            Ok(CostFunction::inverse_proportional(c, fp, floor))
        })
        .collect()
}

/// Lipschitz constant valid for every agent anywhere in the arena: the
/// steepest slope `c / floor^2` of the farthest agent.
pub fn scenario_lipschitz(radio: &RadioParams, arena: &ArenaConfig, max_data_bits: f64, floor: f64) -> Result<f64> {
    let c = full_band_delay(max_data_bits, arena.max_server_distance(), radio)?;
    Ok(c / (floor * floor))
}

/// The seeded environment: agents move once per round and draw fresh
/// processing times; costs are built from the resulting positions.
#[derive(Debug, Clone)]
pub struct EdgeEnvironment {
    radio: RadioParams,
    arena: ArenaConfig,
    floor: f64,
    profiles: Vec<AgentProfile>,
    walkers: Vec<Waypoint>,
    mobility_rngs: Vec<ChaCha8Rng>,
    processing_rngs: Vec<ChaCha8Rng>,
    round: usize,
}

/// Mobility time step when the previous round was shorter than this.
pub const MIN_MOBILITY_STEP_S: f64 = 0.1;

impl EdgeEnvironment {
    pub fn new(
        radio: RadioParams,
        arena: ArenaConfig,
        profiles: Vec<AgentProfile>,
        floor: f64,
        seed: u64,
    ) -> Result<Self> {
        radio.validate()?;
        arena.validate()?;
        if profiles.is_empty() {
            return Err(Error::InvalidParameter("no agents".into()));
        }
        for p in &profiles {
            p.validate(&arena)?;
        }
        let mut mobility_rngs: Vec<_> = (0..profiles.len())
            .map(|i| stream_rng(seed, Stream::Mobility, i as u64))
            .collect();
        let walkers = profiles
            .iter()
            .zip(mobility_rngs.iter_mut())
            .map(|(p, rng)| Waypoint::start(p.position, p.velocity_nominal, &arena, rng))
            .collect();
        let processing_rngs = (0..profiles.len())
            .map(|i| stream_rng(seed, Stream::Processing, i as u64))
            .collect();
        Ok(Self {
            radio,
            arena,
            floor,
            profiles,
            walkers,
            mobility_rngs,
            processing_rngs,
            round: 0,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.profiles.len()
    }

    pub fn profiles(&self) -> &[AgentProfile] {
        &self.profiles
    }

    pub fn lipschitz_bound(&self) -> Result<f64> {
        let d = self
            .profiles
            .iter()
            .map(|p| p.data_size_bits)
            .fold(0.0, f64::max);
        scenario_lipschitz(&self.radio, &self.arena, d, self.floor)
    }

    /// Costs of the next round. Before every round but the first, agents
    /// move for `elapsed_s` seconds (at least [`MIN_MOBILITY_STEP_S`]).
    pub fn next_round(&mut self, elapsed_s: f64) -> Result<Vec<CostFunction>> {
        if self.round > 0 {
            let dt = elapsed_s.max(MIN_MOBILITY_STEP_S);
            for ((walker, rng), profile) in self
                .walkers
                .iter_mut()
                .zip(self.mobility_rngs.iter_mut())
                .zip(self.profiles.iter_mut())
            {
                profile.position = waypoint_step(walker, &self.arena, dt, rng);
            }
        }
        let delays = self
            .profiles
            .iter()
            .zip(self.processing_rngs.iter_mut())
            .enumerate()
            .map(|(i, (p, rng))| processing_delay(&p.processing, i, self.round, rng))
            .collect::<Result<Vec<f64>>>()?;
        self.round += 1;
        make_round_costs(&self.profiles, &self.radio, &self.arena, &delays, self.floor)
    }
}
