use crate::error::{Error, Result};
use crate::model::{inverse_cost, Allocation, CostFunction, FEASIBILITY_EPS, MAX_BISECTION_ITERS};

/// Exact per-round optimum of `min_x max_i f_i(x_i)` over the unit budget.
///
/// Bisects on the epigraph level `eta`: the minimal shares meeting `eta`
/// sum to a non-increasing function of `eta`, and the optimum is the smallest
/// level at which that sum fits the budget. Leftover budget goes to agent 0,
/// which cannot raise the maximum.
pub fn dynamic_opt(costs: &[CostFunction], tol: f64) -> Result<(Allocation, f64)> {
    if costs.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let n = costs.len();
    let equal = 1.0 / n as f64;
    for (agent, f) in costs.iter().enumerate() {
        if f.domain_floor() > equal {
            return Err(Error::BelowDomainFloor {
                agent,
                share: equal,
                floor: f.domain_floor(),
            });
        }
    }

    let need = |eta: f64| -> Result<f64> {
        costs
            .iter()
            .map(|f| inverse_cost(f, eta, 1.0, tol))
            .sum::<Result<f64>>()
    };

    // nobody can do better than its cost at the full budget, and the equal
    // split is always feasible
    let mut lo = costs.iter().map(|f| f.value(1.0)).fold(f64::NEG_INFINITY, f64::max);
    let mut hi = costs.iter().map(|f| f.value(equal)).fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Infeasible { eta: hi });
    }

    let eta = if need(lo)? <= 1.0 {
        lo
    } else {
        if need(hi)? > 1.0 + FEASIBILITY_EPS {
            return Err(Error::Infeasible { eta: hi });
        }
        for _ in 0..MAX_BISECTION_ITERS {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if need(mid)? <= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let mut shares = costs
        .iter()
        .map(|f| inverse_cost(f, eta, 1.0, tol))
        .collect::<Result<Vec<f64>>>()?;
    let used: f64 = shares.iter().sum();
    if used > 1.0 {
        // only reachable through the FEASIBILITY_EPS slack at `hi`
        shares.iter_mut().for_each(|x| *x /= used);
    } else {
        shares[0] += 1.0 - used;
    }
    Ok((Allocation::new(shares)?, eta))
}
