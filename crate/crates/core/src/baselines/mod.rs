//! Comparison policies: equal sharing, projected subgradient descent,
//! entropic mirror descent, bandit (FKM) descent, online conditional gradient,
//! and the per-round optimum used as the regret comparator.

mod oracle;
mod projection;

pub use oracle::dynamic_opt;
pub use projection::{project_budget, project_feasible};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{evaluate_global, Allocation, CostFunction};

/// Finite-difference step used for subgradients.
pub const FD_STEP: f64 = 1e-6;

/// Default FKM perturbation radius.
pub const FKM_DELTA: f64 = 0.05;

/// `[1/N, ..., 1/N]`.
pub fn equal_step(n: usize) -> Result<Allocation> {
    Allocation::equal(n)
}

/// A subgradient of `max_i f_i(x_i)`: the derivative of the straggler's cost
/// at its share, zero elsewhere.
///
/// The derivative is a central difference with step [`FD_STEP`], clamped to
/// `[domain_floor, 1]`.
pub fn subgradient_max(costs: &[CostFunction], alloc: &Allocation) -> Result<Vec<f64>> {
    let cv = evaluate_global(costs, alloc)?;
    let s = cv.straggler;
    let f = &costs[s];
    let x = alloc[s];
    let floor = f.domain_floor();
    let lo = (x - FD_STEP).max(floor);
    let hi = (x + FD_STEP).min(1.0_f64.max(x));
    if hi - lo < 0.5 * FD_STEP {
        return Err(Error::StencilOutOfDomain { share: x, floor });
    }
    let mut g = vec![0.0; costs.len()];
    g[s] = (f.value(hi) - f.value(lo)) / (hi - lo);
    Ok(g)
}

/// Projected subgradient step `x - alpha g` onto `{x >= lower, sum(x) <= 1}`.
pub fn ogd_update(x: &[f64], g: &[f64], alpha: f64, lower: f64) -> Result<Allocation> {
    if x.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: g.len(),
        });
    }
    let moved: Vec<f64> = x.iter().zip(g).map(|(x, g)| x - alpha * g).collect();
    Allocation::new(project_budget(&moved, lower, 1.0))
}

/// Online projected subgradient descent on the max cost (OGD-OMM).
#[derive(Debug, Clone)]
pub struct Ogd {
    step_size: f64,
    lower: f64,
}

impl Ogd {
    /// `lower` keeps every share inside the cost functions' domain.
    pub fn new(step_size: f64, lower: f64) -> Self {
        Self { step_size, lower }
    }

    pub fn step(&self, costs: &[CostFunction], alloc: &Allocation) -> Result<Allocation> {
        let g = subgradient_max(costs, alloc)?;
        ogd_update(alloc.shares(), &g, self.step_size, self.lower)
    }
}

/// Closed-form minimizer of `<x, g> + weight * KL(x, x_t)` over the simplex:
/// `x_i ∝ x_i exp(-g_i / weight)`.
pub fn omd_update(x: &[f64], g: &[f64], weight: f64) -> Result<Allocation> {
    if x.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: g.len(),
        });
    }
    if !(weight > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mirror-descent weight must be positive, got {weight}"
        )));
    }
    if let Some(agent) = x.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroShare { agent });
    }
    let logits: Vec<f64> = x.iter().zip(g).map(|(x, g)| x.ln() - g / weight).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Allocation::new(w.into_iter().map(|v| v / z).collect())
}

/// Entropic online mirror descent.
#[derive(Debug, Clone)]
pub struct Omd {
    weight: f64,
    lower: f64,
}

impl Omd {
    pub fn new(weight: f64, lower: f64) -> Self {
        Self { weight, lower }
    }

    pub fn step(&self, costs: &[CostFunction], alloc: &Allocation) -> Result<Allocation> {
        let g = subgradient_max(costs, alloc)?;
        let next = omd_update(alloc.shares(), &g, self.weight)?;
        if next.shares().iter().all(|&x| x >= self.lower) {
            Ok(next)
        } else {
            // underflowed coordinates would leave the cost domain
            Allocation::new(project_budget(next.shares(), self.lower, 1.0))
        }
    }
}

/// One-point gradient estimate `(N / delta) f(v) u`.
pub fn fkm_gradient(delta: f64, value_at_perturbed: f64, unit: &[f64]) -> Vec<f64> {
    let scale = unit.len() as f64 / delta * value_at_perturbed;
    unit.iter().map(|u| scale * u).collect()
}

/// Uniform draw from the unit sphere in `n` dimensions.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Bandit gradient descent with spherical one-point estimates (FKM).
///
/// The iterate lives in the shrunk set `{y >= floor + delta, sum(y) <= 1 -
/// delta sqrt(N)}`, which is exactly the set of points whose `delta`-ball
/// stays feasible; the played point is `y + delta u`.
#[derive(Debug, Clone)]
pub struct Fkm {
    center: Vec<f64>,
    unit: Vec<f64>,
    delta: f64,
    step_size: f64,
    lower: f64,
    budget: f64,
}

impl Fkm {
    pub fn new(n: usize, delta: f64, step_size: f64, floor: f64) -> Result<Self> {
        let lower = floor + delta;
        let budget = 1.0 - delta * (n as f64).sqrt();
        if !(delta > 0.0) || lower * n as f64 > budget {
            return Err(Error::PerturbationTooLarge { delta });
        }
        let start = vec![1.0 / n as f64; n];
        Ok(Self {
            center: project_budget(&start, lower, budget),
            unit: vec![0.0; n],
            delta,
            step_size,
            lower,
            budget,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn last_unit(&self) -> &[f64] {
        &self.unit
    }

    /// Draws a fresh direction and returns the perturbed point to play.
    pub fn perturb<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Allocation> {
        projection::check_inside(&self.center, self.lower, self.budget, self.delta)?;
        self.unit = random_unit_vector(self.center.len(), rng);
        let v: Vec<f64> = self
            .center
            .iter()
            .zip(&self.unit)
            .map(|(y, u)| y + self.delta * u)
            .collect();
        Allocation::new(v).map_err(|_| Error::PerturbationTooLarge { delta: self.delta })
    }

    /// Descent on the estimate built from the cost observed at the last
    /// perturbed point, followed by a new perturbation.
    pub fn step<R: Rng + ?Sized>(&mut self, value_at_perturbed: f64, rng: &mut R) -> Result<Allocation> {
        let g = fkm_gradient(self.delta, value_at_perturbed, &self.unit);
        let moved: Vec<f64> = self
            .center
            .iter()
            .zip(&g)
            .map(|(y, g)| y - self.step_size * g)
            .collect();
        self.center = project_budget(&moved, self.lower, self.budget);
        self.perturb(rng)
    }
}

/// Vertex of `{x >= 0, sum(x) <= 1}` minimizing `<x, grad>`: the full budget
/// on the most negative coordinate, or the origin if none is negative.
pub fn linear_minimizer(grad: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; grad.len()];
    let best = grad
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (i, &g)| match acc {
            Some((_, b)) if b <= g => acc,
            _ => Some((i, g)),
        });
    if let Some((i, g)) = best {
        if g < 0.0 {
            v[i] = 1.0;
        }
    }
    v
}

/// Online conditional gradient on the aggregated subgradients.
#[derive(Debug, Clone)]
pub struct Ocg {
    aggregated: Vec<f64>,
    round: usize,
}

impl Ocg {
    pub fn new(n: usize) -> Self {
        Self {
            aggregated: vec![0.0; n],
            round: 0,
        }
    }

    pub fn aggregated_gradient(&self) -> &[f64] {
        &self.aggregated
    }

    pub fn rounds_seen(&self) -> usize {
        self.round
    }

    /// Folds in one more subgradient and moves `x` towards the linear
    /// minimizer with step `1 / (t + 1)`, `t` being the number of observed
    /// rounds. The first move therefore mixes the initial allocation and the
    /// vertex half and half.
    pub fn step(&mut self, x: &[f64], g: &[f64]) -> Result<Allocation> {
        if x.len() != self.aggregated.len() || g.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.aggregated.len(),
                found: x.len().min(g.len()),
            });
        }
        for (a, gi) in self.aggregated.iter_mut().zip(g) {
            *a += gi;
        }
        self.round += 1;
        let v = linear_minimizer(&self.aggregated);
        let gamma = 1.0 / (self.round + 1) as f64;
        Allocation::new(x.iter().zip(&v).map(|(x, v)| x + gamma * (v - x)).collect())
    }
}
