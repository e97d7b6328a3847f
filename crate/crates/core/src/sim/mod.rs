//! Round-driven simulation of the parameter-server message flow.
//!
//! Every round the policy commits to an allocation using only the previous
//! round's feedback, then the cost source reveals the round's delay
//! functions, the played allocation is evaluated, and the per-round optimum
//! is computed as the regret comparator.

pub mod checks;
mod config;
pub mod metrics;
pub mod output;
mod policy;

pub use config::{AgentSetup, Algorithm, ProcessingSpec, ScenarioConfig, SCHEMA_VERSION};
pub use policy::{
    build_policy, DoraPolicy, EqualPolicy, FkmPolicy, Observation, OcgPolicy, OgdPolicy, OmdPolicy, Policy,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::dynamic_opt;
use crate::costmodel::EdgeEnvironment;
use crate::dora::update_direction;
use crate::error::{Error, Result};
use crate::model::{evaluate_global, Allocation, CostFunction, CostVector, FEASIBILITY_EPS};

use checks::{check_lemma2, check_lemma3, relinquish_targets, CHECK_TOL};
use metrics::{euclidean_distance, path_length, regret_bound, tail_average_regret, tail_window};

/// Produces each round's cost functions.
pub trait CostSource {
    fn num_agents(&self) -> usize;

    /// Costs of the next round; `elapsed_s` is how long the previous round
    /// took, for sources whose state evolves in time.
    fn next_round(&mut self, elapsed_s: f64) -> Result<Vec<CostFunction>>;

    /// Uniform Lipschitz bound of every cost this source can produce.
    fn lipschitz_bound(&self) -> Option<f64>;
}

impl CostSource for EdgeEnvironment {
    fn num_agents(&self) -> usize {
        EdgeEnvironment::num_agents(self)
    }

    fn next_round(&mut self, elapsed_s: f64) -> Result<Vec<CostFunction>> {
        EdgeEnvironment::next_round(self, elapsed_s)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        EdgeEnvironment::lipschitz_bound(self).ok()
    }
}

/// The same costs every round.
#[derive(Debug, Clone)]
pub struct StaticSource {
    costs: Vec<CostFunction>,
    lipschitz: Option<f64>,
}

impl StaticSource {
    /// The Lipschitz bound is the largest declared bound of the costs, if
    /// all of them declare one.
    pub fn new(costs: Vec<CostFunction>) -> Self {
        let lipschitz = costs
            .iter()
            .map(CostFunction::lipschitz_bound)
            .try_fold(0.0f64, |acc, l| l.map(|l| acc.max(l)));
        Self { costs, lipschitz }
    }
}

impl CostSource for StaticSource {
    fn num_agents(&self) -> usize {
        self.costs.len()
    }

    fn next_round(&mut self, _elapsed_s: f64) -> Result<Vec<CostFunction>> {
        Ok(self.costs.clone())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// Costs produced by a closure of the zero-based round index.
pub struct FnSource<F> {
    n: usize,
    round: usize,
    make: F,
    lipschitz: Option<f64>,
}

impl<F: FnMut(usize) -> Result<Vec<CostFunction>>> FnSource<F> {
    pub fn new(n: usize, lipschitz: Option<f64>, make: F) -> Self {
        Self {
            n,
            round: 0,
            make,
            lipschitz,
        }
    }
}

impl<F: FnMut(usize) -> Result<Vec<CostFunction>>> CostSource for FnSource<F> {
    fn num_agents(&self) -> usize {
        self.n
    }

    fn next_round(&mut self, _elapsed_s: f64) -> Result<Vec<CostFunction>> {
        let costs = (self.make)(self.round)?;
        self.round += 1;
        Ok(costs)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// Who picks the allocations.
pub enum Player<'a> {
    Online(&'a mut dyn Policy),
    /// Plays the per-round optimum of the costs it is about to face.
    Oracle,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub horizon: usize,
    /// Step size reported to the regret bound.
    pub step_size: f64,
    pub tol: f64,
    pub checks: bool,
    pub record_policy_time: bool,
}

impl SimOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            horizon: cfg.horizon,
            step_size: cfg.step_size,
            tol: cfg.bisection_tol,
            checks: cfg.checks,
            record_policy_time: cfg.record_policy_time,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// One-based round index.
    pub t: usize,
    pub allocation: Vec<f64>,
    pub costs: Vec<f64>,
    pub global_cost: f64,
    pub straggler: usize,
    pub oracle_allocation: Vec<f64>,
    pub oracle_cost: f64,
    pub regret: f64,
    pub regret_cum: f64,
    pub path_length_inc: f64,
    pub path_length_cum: f64,
    pub policy_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma2: Option<[bool; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma3: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub horizon: usize,
    pub final_regret: f64,
    pub tail_average_regret: f64,
    pub tail_window: (usize, usize),
    pub total_policy_time_s: f64,
    pub path_length: f64,
    pub lipschitz: Option<f64>,
    pub regret_bound: Option<f64>,
    pub check_failures: usize,
    /// The first few failed checks, for diagnostics.
    pub failure_messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub records: Vec<RoundRecord>,
    pub summary: RunSummary,
}

impl RunResult {
    pub fn checks_passed(&self) -> bool {
        self.summary.check_failures == 0
    }
}

const MAX_FAILURE_MESSAGES: usize = 20;

#[derive(Default)]
struct Failures {
    count: usize,
    messages: Vec<String>,
}

impl Failures {
    fn push(&mut self, msg: impl FnOnce() -> String) {
        self.count += 1;
        if self.messages.len() < MAX_FAILURE_MESSAGES {
            self.messages.push(msg());
        }
    }
}

/// Runs `player` against `source` for `opts.horizon` rounds.
pub fn simulate(mut player: Player<'_>, source: &mut dyn CostSource, opts: &SimOptions) -> Result<RunResult> {
    let n = source.num_agents();
    let lipschitz = source.lipschitz_bound();
    let verify_lemmas = opts.checks && matches!(&player, Player::Online(p) if p.verifies_lemmas());
    let name = match &player {
        Player::Online(p) => p.name().to_string(),
        Player::Oracle => Algorithm::DynamicOpt.name().to_string(),
    };

    let mut records: Vec<RoundRecord> = Vec::with_capacity(opts.horizon);
    let mut failures = Failures::default();
    let mut previous: Option<(Vec<CostFunction>, Allocation, CostVector)> = None;
    let mut elapsed = 0.0;
    let (mut regret_cum, mut path_cum, mut total_time) = (0.0, 0.0, 0.0);

    for t in 1..=opts.horizon {
        let clock = opts.record_policy_time.then(Instant::now);
        let decided = match &mut player {
            Player::Online(p) => Some(match &previous {
                None => p.initial()?,
                Some((costs, alloc, outcome)) => p.decide(&Observation {
                    round: t,
                    costs,
                    allocation: alloc,
                    outcome,
                })?,
            }),
            Player::Oracle => None,
        };
        let mut policy_time = clock.map_or(0.0, |c| c.elapsed().as_secs_f64());

        let costs = source.next_round(elapsed)?;
        if costs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: costs.len(),
            });
        }
        let clock = opts.record_policy_time.then(Instant::now);
        let (oracle_alloc, _) = dynamic_opt(&costs, opts.tol)?;
        let oracle_time = clock.map_or(0.0, |c| c.elapsed().as_secs_f64());
        let oracle = evaluate_global(&costs, &oracle_alloc)?;
        let allocation = match decided {
            Some(a) => a,
            None => {
                policy_time = oracle_time;
                oracle_alloc.clone()
            }
        };
        if allocation.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: allocation.len(),
            });
        }
        let outcome = evaluate_global(&costs, &allocation)?;

        let regret = outcome.global - oracle.global;
        regret_cum += regret;
        let path_inc = records
            .last()
            .map_or(0.0, |r| euclidean_distance(&r.oracle_allocation, oracle_alloc.shares()));
        path_cum += path_inc;
        total_time += policy_time;

        let (mut lemma2, mut lemma3) = (None, None);
        if opts.checks {
            let total = allocation.total();
            if total > 1.0 + FEASIBILITY_EPS || allocation.shares().iter().any(|&x| x < 0.0) {
                failures.push(|| format!("round {t}: infeasible allocation (sum {total})"));
            }
            if regret < -CHECK_TOL {
                failures.push(|| format!("round {t}: negative regret {regret}"));
            }
        }
        if verify_lemmas {
            let x = allocation.shares();
            let targets = relinquish_targets(&costs, x, outcome.global, opts.tol)?;
            let l2 = check_lemma2(x, outcome.straggler, &targets, oracle_alloc.shares(), CHECK_TOL);
            for (k, ok) in l2.iter().enumerate() {
                if !ok {
                    failures.push(|| format!("round {t}: pairing property {} violated", k + 1));
                }
            }
            lemma2 = Some(l2);
            if let Some(l) = lipschitz {
                let g = update_direction(x, &targets, outcome.straggler)?;
                let ok = check_lemma3(
                    outcome.global,
                    oracle.global,
                    x,
                    &g,
                    oracle_alloc.shares(),
                    l,
                    CHECK_TOL,
                );
                if !ok {
                    failures.push(|| format!("round {t}: per-round regret inequality violated"));
                }
                lemma3 = Some(ok);
            }
        }

        records.push(RoundRecord {
            t,
            allocation: allocation.shares().to_vec(),
            costs: outcome.per_agent.clone(),
            global_cost: outcome.global,
            straggler: outcome.straggler,
            oracle_allocation: oracle_alloc.into_inner(),
            oracle_cost: oracle.global,
            regret,
            regret_cum,
            path_length_inc: path_inc,
            path_length_cum: path_cum,
            policy_time_s: policy_time,
            lemma2,
            lemma3,
        });
        // agents move for as long as the round takes at its best
        elapsed = oracle.global;
        previous = Some((costs, allocation, outcome));
    }

    let final_regret = regret_cum;
    let p_t = path_length(&records);
    let bound = if verify_lemmas {
        lipschitz.map(|l| regret_bound(opts.horizon, l, opts.step_size, p_t))
    } else {
        None
    };
    if let Some(b) = bound {
        if final_regret > b + CHECK_TOL {
            failures.push(|| format!("dynamic regret {final_regret} exceeds its bound {b}"));
        }
    }
    Ok(RunResult {
        summary: RunSummary {
            algorithm: name,
            horizon: opts.horizon,
            final_regret,
            tail_average_regret: tail_average_regret(&records),
            tail_window: tail_window(opts.horizon),
            total_policy_time_s: total_time,
            path_length: p_t,
            lipschitz,
            regret_bound: bound,
            check_failures: failures.count,
            failure_messages: failures.messages,
        },
        records,
    })
}

/// Runs `cfg.algorithm` on the environment described by `cfg`.
pub fn run(cfg: &ScenarioConfig) -> Result<RunResult> {
    run_algorithm(cfg, cfg.algorithm)
}

/// Runs `algorithm` on the environment described by `cfg`. Every algorithm
/// sees the same channel and processing realizations for a given seed.
pub fn run_algorithm(cfg: &ScenarioConfig, algorithm: Algorithm) -> Result<RunResult> {
    cfg.validate()?;
    let mut env = cfg.environment()?;
    let opts = SimOptions::from_config(cfg);
    match build_policy(algorithm, cfg)? {
        Some(mut p) => simulate(Player::Online(p.as_mut()), &mut env, &opts),
        None => simulate(Player::Oracle, &mut env, &opts),
    }
}
