//! Allocations, cost functions and the monotone-inverse primitive.
//!
//! Every policy in this crate works on the same objects: an [`Allocation`] of
//! a unit resource budget across `N` agents, one opaque non-increasing
//! [`CostFunction`] per agent, and the [`CostVector`] obtained by evaluating
//! them. The global cost of a round is the worst per-agent cost.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the unit budget.
pub const FEASIBILITY_EPS: f64 = 1e-9;

/// Smallest admissible share for cost functions that diverge at zero.
pub const DEFAULT_DOMAIN_FLOOR: f64 = 1e-9;

/// Default bisection tolerance, in cost units.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Iteration cap for every bisection in the crate.
pub const MAX_BISECTION_ITERS: usize = 200;

/// Per-agent resource shares under a unit budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Allocation {
    shares: Vec<f64>,
}

impl Allocation {
    /// Validates non-negativity and the budget `sum <= 1 + FEASIBILITY_EPS`.
    pub fn new(shares: Vec<f64>) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::InvalidAllocation("no agents".into()));
        }
        for (i, &x) in shares.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidAllocation(format!(
                    "share {x} of agent {i} is negative or not finite"
                )));
            }
        }
        let sum: f64 = shares.iter().sum();
        if sum > 1.0 + FEASIBILITY_EPS {
            return Err(Error::InvalidAllocation(format!(
                "shares sum to {sum}, exceeding the unit budget"
            )));
        }
        Ok(Self { shares })
    }

    /// `[1/N, ..., 1/N]`.
    pub fn equal(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAllocation("no agents".into()));
        }
        Ok(Self {
            shares: vec![1.0 / n as f64; n],
        })
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.shares.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.shares
    }
}

impl TryFrom<Vec<f64>> for Allocation {
    type Error = Error;

    fn try_from(shares: Vec<f64>) -> Result<Self> {
        Self::new(shares)
    }
}

impl From<Allocation> for Vec<f64> {
    fn from(a: Allocation) -> Self {
        a.shares
    }
}

impl std::ops::Index<usize> for Allocation {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.shares[i]
    }
}

type Evaluator = dyn Fn(f64) -> f64 + Send + Sync;

/// A monotone non-increasing map from a resource share to a cost.
///
/// The evaluator is opaque: algorithms may only query values. Functions
/// diverging at zero declare a positive `domain_floor`; evaluation below it
/// is an error.
#[derive(Clone)]
pub struct CostFunction {
    eval: Arc<Evaluator>,
    domain_floor: f64,
    lipschitz: Option<f64>,
}

impl CostFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            domain_floor: 0.0,
            lipschitz: None,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.domain_floor = floor.max(0.0);
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// `x -> d / x + p` on `[floor, 1]`, with the analytic Lipschitz bound
    /// `d / floor^2`.
    pub fn inverse_proportional(d: f64, p: f64, floor: f64) -> Self {
        Self::new(move |x| d / x + p)
            .with_floor(floor)
            .with_lipschitz(d / (floor * floor))
    }

    /// `x -> a - b x`, Lipschitz with constant `b`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(move |x| a - b * x).with_lipschitz(b.abs())
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Checked evaluation.
    pub fn evaluate(&self, share: f64) -> Result<f64> {
        if share < self.domain_floor || share.is_nan() {
            return Err(Error::BelowDomainFloor {
                agent: 0,
                share,
                floor: self.domain_floor,
            });
        }
        Ok((self.eval)(share))
    }

    /// Unchecked evaluation, for callers that already clamp to the domain.
    #[inline]
    pub fn value(&self, share: f64) -> f64 {
        (self.eval)(share)
    }
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFunction")
            .field("domain_floor", &self.domain_floor)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Observed per-agent costs of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub per_agent: Vec<f64>,
    pub global: f64,
    /// Smallest index attaining `global`.
    pub straggler: usize,
}

impl CostVector {
    pub fn from_costs(per_agent: Vec<f64>) -> Result<Self> {
        if per_agent.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut straggler = 0;
        for (i, &c) in per_agent.iter().enumerate() {
            // strict comparison keeps the lowest index on ties
            if c > per_agent[straggler] {
                straggler = i;
            }
        }
        Ok(Self {
            global: per_agent[straggler],
            straggler,
            per_agent,
        })
    }
}

/// Evaluates every agent's cost at its share and takes the pointwise maximum.
pub fn evaluate_global(costs: &[CostFunction], alloc: &Allocation) -> Result<CostVector> {
    evaluate_shares(costs, alloc.shares())
}

/// [`evaluate_global`] on a raw share slice (perturbed points, grids).
pub fn evaluate_shares(costs: &[CostFunction], shares: &[f64]) -> Result<CostVector> {
    if costs.len() != shares.len() {
        return Err(Error::DimensionMismatch {
            expected: costs.len(),
            found: shares.len(),
        });
    }
    let per_agent = costs
        .iter()
        .zip(shares)
        .enumerate()
        .map(|(agent, (f, &x))| {
            f.evaluate(x).map_err(|e| match e {
                Error::BelowDomainFloor { share, floor, .. } => {
                    Error::BelowDomainFloor { agent, share, floor }
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CostVector::from_costs(per_agent)
}

/// Smallest share in `[domain_floor, hi]` whose cost does not exceed `eta`.
///
/// A bracketing search keeps `f(lo) > eta >= f(hi)` and stops once both ends
/// are within `tol` of `eta` in cost, or the bracket reaches float
/// resolution. Trial points come from fitting `a / x + b` through the bracket
/// ends, which is exact for delay-type costs; whenever the bracket fails to
/// halve within two steps the next point is the midpoint, so the search is
/// never much slower than plain bisection.
///
/// Returns `hi` itself when no smaller share meets the target (an agent at
/// the target keeps its share) and `domain_floor` when even the minimal share
/// meets it. On flat stretches the left-most root is returned.
pub fn inverse_cost(f: &CostFunction, eta: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let floor = f.domain_floor();
    if hi < floor {
        return Err(Error::BelowDomainFloor {
            agent: 0,
            share: hi,
            floor,
        });
    }
    let f_hi = f.value(hi);
    if eta < f_hi {
        return Err(Error::TargetBelowCost { eta, cost: f_hi });
    }
    let f_floor = f.value(floor);
    if f_floor <= eta {
        return Ok(floor);
    }
    // excess cost over the target: g_lo > 0 >= g_hi; `u` is the reciprocal
    // share, in which `a / x + b` is linear
    let (mut lo, mut hi) = (floor, hi);
    let (mut u_lo, mut u_hi) = (1.0 / lo, 1.0 / hi);
    let (mut g_lo, mut g_hi) = (f_floor - eta, f_hi - eta);
    let mut widths = [f64::INFINITY; 2];
    for _ in 0..MAX_BISECTION_ITERS {
        if -g_hi <= tol && g_lo <= tol {
            break;
        }
        let width = hi - lo;
        let stalled = width > 0.5 * widths[1];
        widths = [width, widths[0]];
        let mid = 0.5 * (lo + hi);
        // du / dg along the fitted curve
        let du_dg = (u_lo - u_hi) / (g_lo - g_hi);
        // trial share and, when already known, its reciprocal
        let (trial, u_trial) = if stalled {
            (mid, None)
        } else if -g_hi <= tol {
            // hi already meets the target: certify that nothing to its left
            // does, probing where the fitted cost exceeds eta by tol / 2
            let step = (0.5 * tol * du_dg * hi * hi).min(0.5 * width);
            let x = hi - step;
            (if x < hi { x } else { mid }, None)
        } else {
            let u = u_hi - g_hi * du_dg;
            let x = 1.0 / u;
            if x > lo && x < hi {
                (x, Some(u))
            } else {
                (mid, None)
            }
        };
        if trial <= lo || trial >= hi {
            if mid <= lo || mid >= hi {
                break;
            }
            continue;
        }
        let g = f.value(trial) - eta;
        let u = u_trial.unwrap_or_else(|| 1.0 / trial);
        if g <= 0.0 {
            hi = trial;
            u_hi = u;
            g_hi = g;
        } else {
            lo = trial;
            u_lo = u;
            g_lo = g;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn inv(d: f64) -> CostFunction {
        CostFunction::inverse_proportional(d, 0.0, DEFAULT_DOMAIN_FLOOR)
    }

    #[test]
    fn global_cost_of_two_inverse_agents() {
        let costs = [inv(1.0), inv(2.0)];
        let cv = evaluate_global(&costs, &Allocation::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(cv.per_agent, vec![2.0, 4.0]);
        assert_eq!(cv.global, 4.0);
        assert_eq!(cv.straggler, 1);
    }

    #[test]
    fn identical_agents_break_ties_to_lowest_index() {
        let costs = vec![inv(1.5); 4];
        let cv = evaluate_global(&costs, &Allocation::equal(4).unwrap()).unwrap();
        assert!(cv.per_agent.iter().all(|&c| c == cv.per_agent[0]));
        assert_eq!(cv.straggler, 0);
    }

    #[test]
    fn global_cost_of_linear_agents() {
        let costs = [
            CostFunction::linear(2.0, 1.0),
            CostFunction::linear(2.0, 1.0),
            CostFunction::linear(3.0, 1.0),
        ];
        let cv = evaluate_global(&costs, &Allocation::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        assert_abs_diff_eq!(cv.per_agent[0], 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(cv.per_agent[1], 1.7, epsilon = 1e-15);
        assert_abs_diff_eq!(cv.per_agent[2], 2.5, epsilon = 1e-15);
        assert_eq!(cv.global, cv.per_agent[2]);
        assert_eq!(cv.straggler, 2);
    }

    #[test]
    fn evaluation_errors() {
        let costs = [inv(1.0), inv(2.0)];
        let short = Allocation::new(vec![1.0]).unwrap();
        assert!(matches!(
            evaluate_global(&costs, &short),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        let starved = Allocation::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            evaluate_global(&costs, &starved),
            Err(Error::BelowDomainFloor { agent: 1, .. })
        ));
    }

    #[test]
    fn allocation_rejects_infeasible_shares() {
        assert!(Allocation::new(vec![0.6, 0.6]).is_err());
        assert!(Allocation::new(vec![-0.1, 0.5]).is_err());
        assert!(Allocation::new(vec![f64::NAN]).is_err());
        assert!(Allocation::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        let five = Allocation::equal(5).unwrap();
        assert!(five.shares().iter().all(|&x| x == 0.2));
        assert_eq!(Allocation::equal(1).unwrap().shares(), &[1.0]);
    }

    #[test]
    fn inverse_of_reciprocal() {
        let x = inverse_cost(&inv(1.0), 2.0, 1.0, DEFAULT_TOLERANCE).unwrap();
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn inverse_clamps_to_floor_when_target_is_slack() {
        let x = inverse_cost(&CostFunction::linear(2.0, 1.0), 3.0, 1.0, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn inverse_keeps_share_at_target() {
        let x = inverse_cost(&inv(2.0), 4.0, 0.5, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(x, 0.5);
    }

    #[test]
    fn inverse_errors() {
        assert!(matches!(
            inverse_cost(&inv(1.0), 2.0, 1.0, 0.0),
            Err(Error::InvalidTolerance(_))
        ));
        assert!(matches!(
            inverse_cost(&inv(1.0), 0.5, 1.0, 1e-10),
            Err(Error::TargetBelowCost { .. })
        ));
    }

    #[test]
    fn inverse_on_flat_segment_returns_a_root() {
        // flat at 1.0 on [0.3, 0.6]
        let f = CostFunction::new(|x: f64| {
            if x < 0.3 {
                1.0 + (0.3 - x)
            } else if x <= 0.6 {
                1.0
            } else {
                1.0 - (x - 0.6)
            }
        });
        let x = inverse_cost(&f, 1.0, 0.9, 1e-10).unwrap();
        assert!((f.value(x) - 1.0).abs() <= 1e-10);
        assert!(x <= 0.9);
    }

    /// Random strictly decreasing test functions: a mix of reciprocal,
    /// exponential-decay and piecewise-linear shapes.
    fn random_monotone(kind: u8, a: f64, b: f64) -> CostFunction {
        match kind % 3 {
            0 => CostFunction::inverse_proportional(a, b, 1e-6),
            1 => CostFunction::new(move |x: f64| b + a * (-3.0 * x).exp()),
            _ => CostFunction::new(move |x: f64| {
                if x < 0.5 {
                    b + a * (1.0 - x)
                } else {
                    b + a * 0.5 - 0.1 * a * (x - 0.5)
                }
            }),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bisection_meets_tolerance(
            kind in 0u8..3,
            a in 0.01f64..5.0,
            b in 0.0f64..2.0,
            hi in 0.05f64..1.0,
            frac in 0.0f64..1.0,
        ) {
            let f = random_monotone(kind, a, b);
            let floor = f.domain_floor();
            let (f_hi, f_lo) = (f.value(hi), f.value(floor));
            let eta = f_hi + frac * (f_lo - f_hi);
            let tol = DEFAULT_TOLERANCE;
            let x = inverse_cost(&f, eta, hi, tol).unwrap();
            prop_assert!(x <= hi && x >= floor);
            if f_lo > eta {
                // for steep functions the share resolution may bind first
                let gap = (f.value(x) - eta).abs();
                let step = 4.0 * f64::EPSILON * hi.max(1.0);
                let slope = (f.value((x - step).max(floor)) - f.value(x)) / step;
                prop_assert!(gap <= tol || gap <= slope.abs() * step, "gap {gap}");
            }
        }

        #[test]
        fn evaluation_is_deterministic(shares in proptest::collection::vec(0.01f64..0.2, 1..8)) {
            let costs: Vec<_> = (0..shares.len()).map(|i| inv(1.0 + (i % 3) as f64)).collect();
            let total: f64 = shares.iter().sum();
            let alloc = Allocation::new(shares.iter().map(|x| x / total.max(1.0)).collect()).unwrap();
            let a = evaluate_global(&costs, &alloc).unwrap();
            let b = evaluate_global(&costs, &alloc).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
