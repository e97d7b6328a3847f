use super::RoundRecord;

/// Cumulative gap between the played and the per-round optimal global cost.
pub fn dynamic_regret(records: &[RoundRecord]) -> f64 {
    records.iter().map(|r| r.global_cost - r.oracle_cost).sum()
}

/// Total Euclidean travel of the per-round optimal allocations.
pub fn path_length(records: &[RoundRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| euclidean_distance(&w[0].oracle_allocation, &w[1].oracle_allocation))
        .sum()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Upper bound on the dynamic regret of the re-allocation algorithm:
/// `sqrt(T L^2 (3 / (2 alpha) + P / alpha + T (4 + alpha) / 2))`.
pub fn regret_bound(horizon: usize, lipschitz: f64, step_size: f64, path_length: f64) -> f64 {
    let t = horizon as f64;
    (t * lipschitz * lipschitz * (1.5 / step_size + path_length / step_size + t * (4.0 + step_size) / 2.0)).sqrt()
}

/// One-based inclusive round window used for the tail average: the last 11
/// of 470 rounds, scaled proportionally for other horizons.
pub fn tail_window(horizon: usize) -> (usize, usize) {
    let start = ((horizon as f64) * 460.0 / 470.0).round() as usize;
    (start.clamp(1, horizon.max(1)), horizon)
}

/// Mean cumulative regret over [`tail_window`].
pub fn tail_average_regret(records: &[RoundRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let (start, end) = tail_window(records.len());
    let window = &records[start - 1..end];
    window.iter().map(|r| r.regret_cum).sum::<f64>() / window.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(global: f64, oracle: f64, x_star: Vec<f64>) -> RoundRecord {
        RoundRecord {
            global_cost: global,
            oracle_cost: oracle,
            oracle_allocation: x_star,
            ..RoundRecord::default()
        }
    }

    #[test]
    fn regret_arithmetic() {
        let r = vec![record(3.0, 2.0, vec![0.5, 0.5]), record(3.0, 2.0, vec![0.5, 0.5])];
        assert_eq!(dynamic_regret(&r), 2.0);
        assert_eq!(path_length(&r), 0.0);
    }

    #[test]
    fn swap_path_length() {
        let r = vec![record(1.0, 1.0, vec![1.0, 0.0]), record(1.0, 1.0, vec![0.0, 1.0])];
        assert!((path_length(&r) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bound_example_and_monotonicity() {
        assert!((regret_bound(100, 1.0, 0.5, 0.0) - 22800f64.sqrt()).abs() < 1e-9);
        assert!((regret_bound(100, 1.0, 0.5, 0.0) - 151.0).abs() < 0.01);
        assert!(regret_bound(100, 1.0, 0.5, 1.0) > regret_bound(100, 1.0, 0.5, 0.0));
        assert!(regret_bound(101, 1.0, 0.5, 0.0) > regret_bound(100, 1.0, 0.5, 0.0));
    }

    #[test]
    fn tail_windows() {
        assert_eq!(tail_window(470), (460, 470));
        assert_eq!(tail_window(1), (1, 1));
        assert_eq!(tail_window(47), (46, 47));
    }
}
