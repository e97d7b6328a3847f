//! Runtime verification of the per-round properties the regret analysis
//! relies on. All comparisons allow an absolute slack of `tol`.

use crate::dora::UpdateDirection;
use crate::error::{Error, Result};
use crate::model::{inverse_cost, CostFunction};

/// Slack used by the sim's runtime checks.
pub const CHECK_TOL: f64 = 1e-6;

/// Relinquish targets against the round's own costs: the smallest share each
/// agent could have kept while staying at or below `global_cost`.
pub fn relinquish_targets(costs: &[CostFunction], shares: &[f64], global_cost: f64, tol: f64) -> Result<Vec<f64>> {
    if costs.len() != shares.len() {
        return Err(Error::DimensionMismatch {
            expected: shares.len(),
            found: costs.len(),
        });
    }
    costs
        .iter()
        .zip(shares)
        .map(|(f, &x)| inverse_cost(f, global_cost, x, tol))
        .collect()
}

/// The five properties relating an allocation `x` with straggler `s`, its
/// relinquish targets `x'` and an optimum `x*`:
///
/// 1. `x_s <= x*_s`
/// 2. `x'_i <= x_i` for all `i`
/// 3. `sum(x') <= 1`
/// 4. `x'_i <= x*_i` for all `i`
/// 5. `sum_{i != s} (x_i - x'_i)(x_i - x*_i) >= -2`
pub fn check_lemma2(shares: &[f64], straggler: usize, targets: &[f64], oracle: &[f64], tol: f64) -> [bool; 5] {
    let s = straggler;
    let p1 = shares[s] <= oracle[s] + tol;
    let p2 = targets.iter().zip(shares).all(|(t, x)| *t <= x + tol);
    let p3 = targets.iter().sum::<f64>() <= 1.0 + tol;
    let p4 = targets.iter().zip(oracle).all(|(t, o)| *t <= o + tol);
    let cross: f64 = (0..shares.len())
        .filter(|&i| i != s)
        .map(|i| (shares[i] - targets[i]) * (shares[i] - oracle[i]))
        .sum();
    let p5 = cross >= -2.0 - tol;
    [p1, p2, p3, p4, p5]
}

/// `((f(x) - f(x*)) / L)^2 <= 2 + <G, x - x*>`.
pub fn check_lemma3(
    global_cost: f64,
    oracle_cost: f64,
    shares: &[f64],
    direction: &UpdateDirection,
    oracle: &[f64],
    lipschitz: f64,
    tol: f64,
) -> bool {
    let lhs = ((global_cost - oracle_cost) / lipschitz).powi(2);
    let diff: Vec<f64> = shares.iter().zip(oracle).map(|(x, o)| x - o).collect();
    lhs <= 2.0 + direction.dot(&diff) + tol
}
