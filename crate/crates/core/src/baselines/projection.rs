//! Euclidean projection onto budget-constrained boxes.

use crate::error::{Error, Result};
use crate::model::Allocation;

/// Projection onto `{x >= 0, sum(x) <= 1}`.
pub fn project_feasible(v: &[f64]) -> Allocation {
    let p = project_budget(v, 0.0, 1.0);
    // the sort-based threshold can leave the sum a few ulps above 1
    Allocation::new(p).expect("projection lands in the feasible set")
}

/// Projection onto `{x >= lower, sum(x) <= budget}`.
///
/// Clamp to the lower bound first; if that already respects the budget it is
/// the projection. Otherwise the budget constraint is active and the answer
/// is the sort-based simplex projection `max(v - theta, lower)`.
pub fn project_budget(v: &[f64], lower: f64, budget: f64) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(lower)).collect();
    if clamped.iter().sum::<f64>() <= budget {
        return clamped;
    }
    let radius = budget - lower * v.len() as f64;
    let shifted: Vec<f64> = v.iter().map(|&x| x - lower).collect();
    let theta = simplex_threshold(&shifted, radius.max(0.0));
    let mut out: Vec<f64> = shifted.iter().map(|&z| (z - theta).max(0.0)).collect();
    // a huge coordinate makes `z - theta` lose the low digits; rescale so the
    // budget holds exactly up to rounding
    let above: f64 = out.iter().sum();
    if above > radius && above > 0.0 {
        let scale = radius.max(0.0) / above;
        out.iter_mut().for_each(|z| *z *= scale);
    }
    out.into_iter().map(|z| z + lower).collect()
}

/// Threshold `theta` such that `sum(max(z - theta, 0)) == radius`.
fn simplex_threshold(z: &[f64], radius: f64) -> f64 {
    let mut sorted = z.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    theta
}

/// Validates that a raw vector is in the shrunk set used by bandit updates:
/// every coordinate at least `lower` and the total at most `budget`.
pub(crate) fn check_inside(v: &[f64], lower: f64, budget: f64, delta: f64) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|&x| x < lower - 1e-12) || sum > budget + 1e-12 {
        return Err(Error::PerturbationTooLarge { delta });
    }
    Ok(())
}
