//! Distributed online resource re-allocation.
//!
//! Each round has two halves. Every agent looks at its own cost function from
//! the previous round and the previous global cost `eta`, finds the smallest
//! share that would still have kept it at or below `eta` (its relinquish
//! target), and steps a fraction `alpha` of the way towards it. The server
//! then hands everything the non-stragglers gave up to the previous
//! straggler. No gradients and no projections are involved; the work per
//! round is one bisection per agent.

use crate::error::{Error, Result};
use crate::model::{inverse_cost, Allocation, CostFunction, CostVector, FEASIBILITY_EPS};

/// What the agents and the server remember between rounds.
#[derive(Debug, Clone)]
pub struct DoraState {
    pub prev_alloc: Allocation,
    pub prev_costs: CostVector,
    step_size: f64,
    tol: f64,
}

impl DoraState {
    pub fn new(prev_alloc: Allocation, prev_costs: CostVector, step_size: f64, tol: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size < 1.0) {
            return Err(Error::InvalidStepSize(step_size));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance(tol));
        }
        if prev_costs.per_agent.len() != prev_alloc.len() {
            return Err(Error::DimensionMismatch {
                expected: prev_alloc.len(),
                found: prev_costs.per_agent.len(),
            });
        }
        Ok(Self {
            prev_alloc,
            prev_costs,
            step_size,
            tol,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn num_agents(&self) -> usize {
        self.prev_alloc.len()
    }

    /// Replaces the remembered round with a newly played allocation and its
    /// revealed costs.
    pub fn advance(&mut self, alloc: Allocation, costs: CostVector) -> Result<()> {
        if costs.per_agent.len() != alloc.len() || alloc.len() != self.num_agents() {
            return Err(Error::DimensionMismatch {
                expected: self.num_agents(),
                found: alloc.len().min(costs.per_agent.len()),
            });
        }
        self.prev_alloc = alloc;
        self.prev_costs = costs;
        Ok(())
    }

    /// Relinquish target of agent `i`.
    pub fn relinquish_target(&self, i: usize, f_prev: &CostFunction) -> Result<f64> {
        inverse_cost(f_prev, self.prev_costs.global, self.prev_alloc[i], self.tol)
    }
}

/// `G_t`: the move applied by one round, `x_{t+1} = x_t - alpha * G_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDirection {
    pub components: Vec<f64>,
}

impl UpdateDirection {
    pub fn squared_norm(&self) -> f64 {
        self.components.iter().map(|g| g * g).sum()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.components.iter().zip(v).map(|(g, x)| g * x).sum()
    }
}

/// Outcome of one full round.
#[derive(Debug, Clone)]
pub struct DoraRound {
    pub allocation: Allocation,
    /// `x'` for every agent, computed against the previous round.
    pub relinquish_targets: Vec<f64>,
    pub straggler: usize,
}

/// Agent-side update: `x - alpha (x - x')`.
pub fn agent_update(state: &DoraState, i: usize, f_prev: &CostFunction) -> Result<f64> {
    let x = state.prev_alloc[i];
    let target = state.relinquish_target(i, f_prev)?;
    Ok(step_towards(x, target, state.step_size))
}

fn step_towards(x: f64, target: f64, alpha: f64) -> f64 {
    x - alpha * (x - target)
}

/// Server-side update: the previous straggler receives whatever the others
/// no longer hold. The straggler's own entry in `partial` is ignored.
pub fn server_reallocate(partial: &[f64], straggler: usize) -> Result<Allocation> {
    if straggler >= partial.len() {
        return Err(Error::DimensionMismatch {
            expected: straggler + 1,
            found: partial.len(),
        });
    }
    let mut others = 0.0;
    for (i, &x) in partial.iter().enumerate() {
        if i == straggler {
            continue;
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidAllocation(format!(
                "agent {i} reported share {x} outside [0, 1]"
            )));
        }
        others += x;
    }
    if others > 1.0 + FEASIBILITY_EPS {
        return Err(Error::BudgetExceeded { sum: others });
    }
    let mut shares = partial.to_vec();
    shares[straggler] = (1.0 - others).max(0.0);
    Allocation::new(shares)
}

/// One round of the algorithm from the previous round's observations.
///
/// Agents are independent until the server barrier, so the per-agent loop
/// could run in any order.
pub fn dora_round(state: &DoraState, observed: &[CostFunction]) -> Result<DoraRound> {
    let n = state.num_agents();
    if observed.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: observed.len(),
        });
    }
    let mut targets = Vec::with_capacity(n);
    let mut partial = Vec::with_capacity(n);
    for (i, f) in observed.iter().enumerate() {
        let target = state.relinquish_target(i, f)?;
        targets.push(target);
        partial.push(step_towards(state.prev_alloc[i], target, state.step_size));
    }
    let straggler = state.prev_costs.straggler;
    let allocation = server_reallocate(&partial, straggler)?;
    Ok(DoraRound {
        allocation,
        relinquish_targets: targets,
        straggler,
    })
}

/// `G_i = x_i - x'_i` off the straggler, and minus their sum on it.
pub fn update_direction(prev_alloc: &[f64], targets: &[f64], straggler: usize) -> Result<UpdateDirection> {
    if prev_alloc.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: prev_alloc.len(),
            found: targets.len(),
        });
    }
    if straggler >= prev_alloc.len() {
        return Err(Error::DimensionMismatch {
            expected: straggler + 1,
            found: prev_alloc.len(),
        });
    }
    let mut components: Vec<f64> = prev_alloc.iter().zip(targets).map(|(x, t)| x - t).collect();
    components[straggler] = 0.0;
    let relinquished: f64 = components.iter().sum();
    components[straggler] = -relinquished;
    Ok(UpdateDirection { components })
}
