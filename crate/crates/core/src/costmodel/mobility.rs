use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Square deployment area with the parameter server inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig {
    pub side_m: f64,
    /// Defaults to the center of the square.
    #[serde(default)]
    pub server_position: Option<Position>,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            side_m: 500.0,
            server_position: None,
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.side_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arena side must be positive, got {}",
                self.side_m
            )));
        }
        if let Some(p) = self.server_position {
            if !self.contains(&p) {
                return Err(Error::InvalidParameter("server lies outside the arena".into()));
            }
        }
        Ok(())
    }

    pub fn server(&self) -> Position {
        self.server_position
            .unwrap_or(Position::new(self.side_m / 2.0, self.side_m / 2.0))
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.side_m).contains(&p.x) && (0.0..=self.side_m).contains(&p.y)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(rng.random_range(0.0..=self.side_m), rng.random_range(0.0..=self.side_m))
    }

    /// Largest distance from the server to any point of the arena.
    pub fn max_server_distance(&self) -> f64 {
        let s = self.server();
        [
            Position::new(0.0, 0.0),
            Position::new(self.side_m, 0.0),
            Position::new(0.0, self.side_m),
            Position::new(self.side_m, self.side_m),
        ]
        .iter()
        .map(|c| c.distance(&s))
        .fold(0.0, f64::max)
    }
}

/// Random-waypoint state of one agent: zero pause time, a fresh speed from
/// `[0.8 v, 1.2 v]` on every leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub position: Position,
    pub target: Position,
    pub speed: f64,
    pub nominal_speed: f64,
}

impl Waypoint {
    pub fn start<R: Rng + ?Sized>(position: Position, nominal_speed: f64, arena: &ArenaConfig, rng: &mut R) -> Self {
        let mut w = Self {
            position,
            target: position,
            speed: 0.0,
            nominal_speed,
        };
        if nominal_speed > 0.0 {
            w.new_leg(arena, rng);
        }
        w
    }

    fn new_leg<R: Rng + ?Sized>(&mut self, arena: &ArenaConfig, rng: &mut R) {
        self.target = arena.sample(rng);
        self.speed = draw_speed(self.nominal_speed, rng);
    }
}

pub fn draw_speed<R: Rng + ?Sized>(nominal: f64, rng: &mut R) -> f64 {
    if nominal > 0.0 {
        rng.random_range(0.8 * nominal..=1.2 * nominal)
    } else {
        0.0
    }
}

/// Advances an agent by `dt` seconds and returns its new position.
pub fn waypoint_step<R: Rng + ?Sized>(state: &mut Waypoint, arena: &ArenaConfig, dt: f64, rng: &mut R) -> Position {
    if state.nominal_speed <= 0.0 || dt <= 0.0 {
        return state.position;
    }
    let mut budget = state.speed * dt;
    // a leg shorter than the remaining travel ends early; keep going on the next
    for _ in 0..10_000 {
        let remaining = state.position.distance(&state.target);
        if remaining > budget {
            let f = budget / remaining;
            state.position = Position::new(
                state.position.x + f * (state.target.x - state.position.x),
                state.position.y + f * (state.target.y - state.position.y),
            );
            break;
        }
        state.position = state.target;
        budget -= remaining;
        let leftover_time = budget / state.speed;
        state.new_leg(arena, rng);
        budget = state.speed * leftover_time;
        if budget <= 0.0 {
            break;
        }
    }
    state.position
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn static_agent_never_moves() {
        let arena = ArenaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Position::new(12.0, 480.0);
        let mut w = Waypoint::start(p, 0.0, &arena, &mut rng);
        for _ in 0..100 {
            assert_eq!(waypoint_step(&mut w, &arena, 1.5, &mut rng), p);
        }
    }

    #[test]
    fn speeds_stay_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let s = draw_speed(5.0, &mut rng);
            assert!((4.0..=6.0).contains(&s));
        }
    }

    #[test]
    fn agent_stays_in_arena_and_moves_at_speed() {
        let arena = ArenaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w = Waypoint::start(Position::new(250.0, 250.0), 10.0, &arena, &mut rng);
        for _ in 0..5_000 {
            let before = w.position;
            let after = waypoint_step(&mut w, &arena, 2.0, &mut rng);
            assert!(arena.contains(&after));
            // straight-line displacement never exceeds travel at the top speed
            assert!(before.distance(&after) <= 12.0 * 2.0 + 1e-9);
            assert!((8.0..=12.0).contains(&w.speed));
        }
    }

    #[test]
    fn corner_distance() {
        let arena = ArenaConfig::default();
        assert!((arena.max_server_distance() - 250.0 * 2f64.sqrt()).abs() < 1e-9);
    }
}
