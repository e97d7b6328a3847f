use rand_chacha::ChaCha8Rng;

use crate::baselines::{equal_step, subgradient_max, Fkm, Ocg, Ogd, Omd};
use crate::costmodel::{stream_rng, Stream};
use crate::dora::{dora_round, DoraState};
use crate::error::Result;
use crate::model::{Allocation, CostFunction, CostVector};

use super::config::{Algorithm, ScenarioConfig};

/// What a policy may see when deciding round `round`: the previous round's
/// cost functions, the allocation it played then, and the revealed costs.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub round: usize,
    pub costs: &'a [CostFunction],
    pub allocation: &'a Allocation,
    pub outcome: &'a CostVector,
}

/// An online allocation rule.
pub trait Policy {
    fn name(&self) -> &str;

    /// Allocation for the first round, before any feedback.
    fn initial(&mut self) -> Result<Allocation>;

    /// Allocation for `obs.round` from the previous round's feedback.
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Allocation>;

    /// Whether the sim should run the per-round lemma checks on this policy.
    fn verifies_lemmas(&self) -> bool {
        false
    }
}

pub struct EqualPolicy {
    n: usize,
}

impl EqualPolicy {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Policy for EqualPolicy {
    fn name(&self) -> &str {
        Algorithm::Equal.name()
    }

    fn initial(&mut self) -> Result<Allocation> {
        equal_step(self.n)
    }

    fn decide(&mut self, _obs: &Observation<'_>) -> Result<Allocation> {
        equal_step(self.n)
    }
}

pub struct DoraPolicy {
    initial: Allocation,
    step_size: f64,
    tol: f64,
}

impl DoraPolicy {
    pub fn new(initial: Allocation, step_size: f64, tol: f64) -> Self {
        Self {
            initial,
            step_size,
            tol,
        }
    }
}

impl Policy for DoraPolicy {
    fn name(&self) -> &str {
        Algorithm::Dora.name()
    }

    fn initial(&mut self) -> Result<Allocation> {
        Ok(self.initial.clone())
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<Allocation> {
        let state = DoraState::new(obs.allocation.clone(), obs.outcome.clone(), self.step_size, self.tol)?;
        Ok(dora_round(&state, obs.costs)?.allocation)
    }

    fn verifies_lemmas(&self) -> bool {
        true
    }
}

pub struct OgdPolicy {
    initial: Allocation,
    inner: Ogd,
}

impl OgdPolicy {
    pub fn new(initial: Allocation, step_size: f64, floor: f64) -> Self {
        Self {
            initial,
            inner: Ogd::new(step_size, floor),
        }
    }
}

impl Policy for OgdPolicy {
    fn name(&self) -> &str {
        Algorithm::OgdOmm.name()
    }

    fn initial(&mut self) -> Result<Allocation> {
        Ok(self.initial.clone())
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<Allocation> {
        self.inner.step(obs.costs, obs.allocation)
    }
}

pub struct OmdPolicy {
    initial: Allocation,
    inner: Omd,
}

impl OmdPolicy {
    pub fn new(initial: Allocation, weight: f64, floor: f64) -> Self {
        Self {
            initial,
            inner: Omd::new(weight, floor),
        }
    }
}

impl Policy for OmdPolicy {
    fn name(&self) -> &str {
        Algorithm::Omd.name()
    }

    fn initial(&mut self) -> Result<Allocation> {
        Ok(self.initial.clone())
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<Allocation> {
        self.inner.step(obs.costs, obs.allocation)
    }
}

/// FKM only ever looks at the scalar global cost of the point it played.
pub struct FkmPolicy {
    inner: Fkm,
    rng: ChaCha8Rng,
}

impl FkmPolicy {
    pub fn new(n: usize, delta: f64, step_size: f64, floor: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            inner: Fkm::new(n, delta, step_size, floor)?,
            rng: stream_rng(seed, Stream::Policy, 0),
        })
    }
}

impl Policy for FkmPolicy {
    fn name(&self) -> &str {
        Algorithm::Fkm.name()
    }

    fn initial(&mut self) -> Result<Allocation> {
        self.inner.perturb(&mut self.rng)
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<Allocation> {
        self.inner.step(obs.outcome.global, &mut self.rng)
    }
}

pub struct OcgPolicy {
    initial: Allocation,
    inner: Ocg,
}

impl OcgPolicy {
    pub fn new(initial: Allocation) -> Self {
        let n = initial.len();
        Self {
            initial,
            inner: Ocg::new(n),
        }
    }
}

impl Policy for OcgPolicy {
    fn name(&self) -> &str {
        Algorithm::Ocg.name()
    }

    fn initial(&mut self) -> Result<Allocation> {
        Ok(self.initial.clone())
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<Allocation> {
        let g = subgradient_max(obs.costs, obs.allocation)?;
        self.inner.step(obs.allocation.shares(), &g)
    }
}

/// Online policy for `algorithm`, or `None` for the clairvoyant per-round
/// optimum, which the sim plays directly.
pub fn build_policy(algorithm: Algorithm, cfg: &ScenarioConfig) -> Result<Option<Box<dyn Policy>>> {
    let n = cfg.num_agents;
    let init = cfg.initial()?;
    let floor = cfg.domain_floor;
    let policy: Box<dyn Policy> = match algorithm {
        Algorithm::Equal => Box::new(EqualPolicy::new(n)),
        Algorithm::Dora => Box::new(DoraPolicy::new(init, cfg.step_size, cfg.bisection_tol)),
        Algorithm::OgdOmm => Box::new(OgdPolicy::new(init, cfg.step_size, floor)),
        Algorithm::Omd => Box::new(OmdPolicy::new(init, cfg.effective_omd_weight(), floor)),
        Algorithm::Fkm => Box::new(FkmPolicy::new(
            n,
            cfg.effective_fkm_delta(),
            cfg.step_size,
            floor,
            cfg.seed,
        )?),
        Algorithm::Ocg => Box::new(OcgPolicy::new(init)),
        Algorithm::DynamicOpt => return Ok(None),
    };
    Ok(Some(policy))
}
