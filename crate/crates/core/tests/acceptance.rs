//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so the lines are always printed; exits non-zero if any fails.

use std::time::Instant;

use dora_core::baselines::{dynamic_opt, project_feasible};
use dora_core::model::{Allocation, CostFunction, DEFAULT_DOMAIN_FLOOR, DEFAULT_TOLERANCE};
use dora_core::sim::output::write_csv;
use dora_core::sim::{
    run_algorithm, simulate, Algorithm, DoraPolicy, FnSource, Player, ProcessingSpec, RunResult, ScenarioConfig,
    SimOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mobile(seed: u64, velocity: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    cfg.agents.velocity_mps = velocity;
    cfg
}

fn static_scenario(seed: u64) -> ScenarioConfig {
    let mut cfg = mobile(seed, 0.0);
    cfg.agents.processing = ProcessingSpec::Stochastic {
        base_min_s: 0.1,
        base_max_s: 0.5,
        jitter_s: 0.0,
    };
    cfg
}

/// Time-varying linear costs `a_i(t) - b_i(t) x` with slopes in [0.5, 2.5].
fn linear_run(seed: u64, step_size: f64, horizon: usize) -> RunResult {
    let n = 2 + (seed % 6) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(1.0..3.0),
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let lipschitz = 2.5;
    let mut source = FnSource::new(n, Some(lipschitz), move |t| {
        let mut noise = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(t as u64));
        Ok(base
            .iter()
            .map(|&(a, b, phase)| {
                let a = a + 0.3 * (0.05 * t as f64 + phase).sin() + noise.random_range(-0.05..0.05);
                let b = (b + 0.4 * (0.03 * t as f64 + phase).cos()).clamp(0.5, lipschitz);
                CostFunction::linear(a, b)
            })
            .collect())
    });
    let mut dora = DoraPolicy::new(Allocation::equal(n).unwrap(), step_size, DEFAULT_TOLERANCE);
    let opts = SimOptions {
        horizon,
        step_size,
        tol: DEFAULT_TOLERANCE,
        checks: true,
        record_policy_time: false,
    };
    simulate(Player::Online(&mut dora), &mut source, &opts).unwrap()
}

fn criterion_1(all: &[(u64, Vec<RunResult>)], elapsed_s: f64) -> Outcome {
    let mut bad = Vec::new();
    for (seed, runs) in all {
        for run in runs {
            let is_dora = run.summary.algorithm == "dora";
            for r in &run.records {
                let sum: f64 = r.allocation.iter().sum();
                let negative = r.allocation.iter().any(|&x| x < 0.0);
                if sum > 1.0 + 1e-9 || negative || (is_dora && (sum - 1.0).abs() > 1e-9) {
                    bad.push(format!("seed {seed} {} round {}: sum {sum}", run.summary.algorithm, r.t));
                }
            }
        }
    }
    let runs: usize = all.iter().map(|(_, r)| r.len()).sum();
    outcome(
        bad.is_empty() && elapsed_s < 120.0,
        format!(
            "{runs} runs x 470 rounds, {} violations{}, {elapsed_s:.1} s",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

fn dora_runs<'a>(all: &'a [(u64, Vec<RunResult>)], linear: &'a [RunResult]) -> Vec<&'a RunResult> {
    all.iter()
        .flat_map(|(_, runs)| runs.iter().filter(|r| r.summary.algorithm == "dora"))
        .chain(linear.iter())
        .collect()
}

fn criterion_2(runs: &[&RunResult]) -> Outcome {
    let mut rounds = 0;
    let mut violations = [0usize; 5];
    let mut missing = 0;
    for run in runs {
        for r in &run.records {
            rounds += 1;
            match r.lemma2 {
                Some(l) => l.iter().enumerate().filter(|(_, ok)| !**ok).for_each(|(k, _)| violations[k] += 1),
                None => missing += 1,
            }
        }
    }
    outcome(
        violations.iter().all(|&v| v == 0) && missing == 0,
        format!("{} runs, {rounds} rounds, violations per property {violations:?}, unchecked {missing}", runs.len()),
    )
}

fn criterion_3(runs: &[&RunResult]) -> Outcome {
    let (mut rounds, mut failed, mut missing) = (0, 0, 0);
    for run in runs {
        for r in &run.records {
            rounds += 1;
            match r.lemma3 {
                Some(true) => {}
                Some(false) => failed += 1,
                None => missing += 1,
            }
        }
    }
    outcome(
        failed == 0 && missing == 0,
        format!("{} runs, {rounds} rounds, {failed} violations, unchecked {missing}", runs.len()),
    )
}

fn criterion_4(runs: &[&RunResult]) -> Outcome {
    let mut failed = 0;
    let mut tightest: f64 = 0.0;
    for run in runs {
        let s = &run.summary;
        match s.regret_bound {
            Some(b) if s.final_regret <= b => tightest = tightest.max(s.final_regret / b),
            _ => failed += 1,
        }
    }
    outcome(
        failed == 0,
        format!("{} runs, {failed} over the bound, largest regret/bound ratio {tightest:.3e}", runs.len()),
    )
}

/// Minimal shares of the closed-form families, independent of the solver.
fn closed_form_need(family: &[(bool, f64, f64)], eta: f64) -> f64 {
    family
        .iter()
        .map(|&(inverse, a, b)| {
            if inverse {
                // d / x + p
                if eta <= b {
                    f64::INFINITY
                } else {
                    (a / (eta - b)).max(DEFAULT_DOMAIN_FLOOR)
                }
            } else {
                // a - b x
                ((a - eta) / b).max(0.0)
            }
        })
        .sum()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=3);
        let inverse = rng.random_bool(0.5);
        let family: Vec<(bool, f64, f64)> = (0..n)
            .map(|_| {
                if inverse {
                    (true, rng.random_range(0.05..1.0), rng.random_range(0.0..1.0))
                } else {
                    (false, rng.random_range(1.0..3.0), rng.random_range(0.2..3.0))
                }
            })
            .collect();
        let costs: Vec<CostFunction> = family
            .iter()
            .map(|&(inv, a, b)| {
                if inv {
                    CostFunction::inverse_proportional(a, b, DEFAULT_DOMAIN_FLOOR)
                } else {
                    CostFunction::linear(a, b)
                }
            })
            .collect();
        let (_, eta) = dynamic_opt(&costs, DEFAULT_TOLERANCE).unwrap();
        let start = costs.iter().map(|f| f.value(1.0)).fold(f64::NEG_INFINITY, f64::max);
        let grid_eta = (0..)
            .map(|k| start + k as f64 * 1e-3)
            .find(|&e| closed_form_need(&family, e) <= 1.0)
            .unwrap();
        worst = worst.max((grid_eta - eta).abs());
    }
    let mut closed_worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
        let costs: Vec<_> = d
            .iter()
            .map(|&d| CostFunction::inverse_proportional(d, 0.0, DEFAULT_DOMAIN_FLOOR))
            .collect();
        let (x, _) = dynamic_opt(&costs, DEFAULT_TOLERANCE).unwrap();
        let total: f64 = d.iter().sum();
        for (xi, di) in x.shares().iter().zip(&d) {
            closed_worst = closed_worst.max((xi - di / total).abs());
        }
    }
    outcome(
        worst <= 1e-3 && closed_worst <= 1e-6,
        format!("max |eta - grid eta| {worst:.4e} over 200 instances; d/x closed form max share error {closed_worst:.2e}"),
    )
}

/// Nearest feasible point by successively refined grids.
fn grid_projection(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let dist = |y: &[f64]| y.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut center = vec![0.5; d];
    let mut half: f64 = 0.5;
    let mut step: f64 = 0.01;
    let mut best = vec![0.0; d];
    for _ in 0..4 {
        let k = (2.0 * half / step).round() as i64;
        let mut best_d = f64::INFINITY;
        let mut idx = vec![0i64; d];
        loop {
            let y: Vec<f64> = (0..d).map(|j| center[j] - half + idx[j] as f64 * step).collect();
            if y.iter().all(|&c| c >= -1e-12) && y.iter().sum::<f64>() <= 1.0 + 1e-12 {
                let dy = dist(&y);
                if dy < best_d {
                    best_d = dy;
                    best = y;
                }
            }
            let mut j = 0;
            while j < d {
                idx[j] += 1;
                if idx[j] <= k {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == d {
                break;
            }
        }
        center = best.clone();
        half = 2.0 * step;
        step /= 10.0;
    }
    best
}

fn kkt_holds(v: &[f64], p: &[f64]) -> bool {
    let tol = 1e-9;
    if p.iter().any(|&x| x < 0.0) {
        return false;
    }
    let sum: f64 = p.iter().sum();
    if sum > 1.0 + tol {
        return false;
    }
    let positive: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let theta = if sum < 1.0 - tol {
        0.0
    } else {
        match positive.first() {
            Some(&i) => v[i] - p[i],
            None => return false,
        }
    };
    theta >= -tol
        && positive.iter().all(|&i| (v[i] - p[i] - theta).abs() <= tol)
        && (0..p.len()).filter(|&i| p[i] == 0.0).all(|i| v[i] <= theta + tol)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let d = 2 + k % 2;
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..1.5)).collect();
        let p = project_feasible(&v);
        let g = grid_projection(&v);
        let err = p.shares().iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    let mut kkt_failures = 0;
    let mut checked = 0;
    for &n in &[5usize, 10, 50, 100, 1000] {
        for _ in 0..200 {
            let scale = rng.random_range(0.01..3.0);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
            let p = project_feasible(&v);
            checked += 1;
            if !kkt_holds(&v, p.shares()) {
                kkt_failures += 1;
            }
        }
    }
    outcome(
        worst <= 1e-3 && kkt_failures == 0,
        format!("max deviation from grid oracle {worst:.2e} (200 points); KKT failures {kkt_failures}/{checked} in 5..1000 dims"),
    )
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for seed in 0..5 {
        let cfg = static_scenario(seed);
        let dora = run_algorithm(&cfg, Algorithm::Dora).unwrap();
        let equal = run_algorithm(&cfg, Algorithm::Equal).unwrap();
        let ogd = run_algorithm(&cfg, Algorithm::OgdOmm).unwrap();
        let gap = dora.records[149..]
            .iter()
            .map(|r| (r.global_cost - r.oracle_cost) / r.oracle_cost)
            .fold(0.0, f64::max);
        let (d, e, o) = (
            dora.summary.tail_average_regret,
            equal.summary.tail_average_regret,
            ogd.summary.tail_average_regret,
        );
        pass &= gap <= 0.02 && d < e && d < o;
        lines.push(format!("seed {seed}: gap {:.2}% tail {d:.3} vs equal {e:.3}, ogd-omm {o:.3e}", 100.0 * gap));
    }
    outcome(pass, format!("max relative gap from round 150 on; {}", lines.join("; ")))
}

fn criterion_8() -> Outcome {
    let velocities = [0.0, 5.0, 10.0];
    let slack = 470.0 * DEFAULT_TOLERANCE;
    let mut pass = true;
    let mut lines = Vec::new();
    for alg in Algorithm::ALL {
        let means: Vec<f64> = velocities
            .iter()
            .map(|&v| {
                (0..5)
                    .map(|seed| run_algorithm(&mobile(seed, v), alg).unwrap().summary.tail_average_regret)
                    .sum::<f64>()
                    / 5.0
            })
            .collect();
        let ok = means.windows(2).all(|w| w[1] >= w[0] - slack);
        pass &= ok;
        lines.push(format!(
            "{alg} {}[{:.3e}, {:.3e}, {:.3e}]",
            if ok { "" } else { "NOT MONOTONE " },
            means[0],
            means[1],
            means[2]
        ));
    }
    outcome(pass, format!("mean tail regret at v = 0/5/10 m/s over 5 paired seeds: {}", lines.join("; ")))
}

fn best_policy_time(n: usize, alg: Algorithm) -> f64 {
    let mut cfg = mobile(0, 5.0);
    cfg.num_agents = n;
    cfg.checks = false;
    cfg.record_policy_time = true;
    (0..5)
        .map(|_| run_algorithm(&cfg, alg).unwrap().summary.total_policy_time_s)
        .fold(f64::INFINITY, f64::min)
}

fn criterion_9() -> Outcome {
    let (d5, d40) = (best_policy_time(5, Algorithm::Dora), best_policy_time(40, Algorithm::Dora));
    let o40 = best_policy_time(40, Algorithm::OgdOmm);
    let others: Vec<String> = [Algorithm::Omd, Algorithm::Fkm, Algorithm::Ocg, Algorithm::DynamicOpt]
        .iter()
        .map(|&a| format!("{a} {:.2e}", best_policy_time(40, a)))
        .collect();
    let ratio = d40 / d5;
    let linear_ok = ratio <= 2.0 * 8.0;
    let faster = d40 < o40;
    outcome(
        linear_ok && faster,
        format!(
            "dora {d5:.2e} s at N=5, {d40:.2e} s at N=40 (x{ratio:.1}, limit x16: {}); ogd-omm {o40:.2e} s at N=40 (dora faster: {faster}); others at N=40: {}",
            if linear_ok { "ok" } else { "exceeded" },
            others.join(", ")
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = mobile(7, 5.0);
    let csv = |cfg: &ScenarioConfig| {
        let runs: Vec<RunResult> = Algorithm::ALL.iter().map(|&a| run_algorithm(cfg, a).unwrap()).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, cfg.num_agents, &runs).unwrap();
        buf
    };
    let (a, b) = (csv(&cfg), csv(&cfg));
    outcome(
        a == b && !a.is_empty(),
        format!("two invocations, all 7 policies: {} bytes each, identical: {}", a.len(), a == b),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    let start = Instant::now();
    let all: Vec<(u64, Vec<RunResult>)> = (0..100)
        .map(|seed| {
            let cfg = mobile(seed, 5.0);
            (seed, Algorithm::ALL.iter().map(|&a| run_algorithm(&cfg, a).unwrap()).collect())
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    results.push(("1 feasibility invariant", criterion_1(&all, elapsed)));

    let linear: Vec<RunResult> = (0..100)
        .map(|seed| linear_run(seed, [0.02, 0.1, 0.5][seed as usize % 3], 470))
        .collect();
    let dora = dora_runs(&all, &linear);
    results.push(("2 relinquish-target properties", criterion_2(&dora)));
    results.push(("3 per-round regret inequality", criterion_3(&dora)));
    results.push(("4 dynamic regret bound", criterion_4(&dora)));
    results.push(("5 oracle correctness", criterion_5()));
    results.push(("6 projection correctness", criterion_6()));
    results.push(("7 static convergence", criterion_7()));
    results.push(("8 velocity trend", criterion_8()));
    results.push(("9 complexity trend", criterion_9()));
    results.push(("10 determinism", criterion_10()));

    let passed = results.iter().filter(|(_, o)| o.pass).count();
    for (name, o) in &results {
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
