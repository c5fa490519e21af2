//! The ring testbeds: a continuous angle on `[0, 2π)` and its `n`-point
//! discretization.
//!
//! Both move by `Δs = μ(s, a)·ε + σ·√ε·Z` with `Z ~ N(0, 1)` and `a ∈ {−1, +1}`
//! (action index 0 is `−1`, index 1 is `+1`), and pay `sin(s') + 1`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{Environment, Step};
use crate::rng::{standard_normal, SimRng};
use crate::Result;

pub const TAU: f64 = std::f64::consts::TAU;

/// Reduces an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(s: f64) -> f64 {
    let w = s.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[inline]
pub fn ring_reward(next: f64) -> f64 {
    next.sin() + 1.0
}

/// Signed action value for a ring action index.
#[inline]
pub fn action_sign(action: usize) -> f64 {
    if action == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousRingEnv {
    pub epsilon: f64,
    pub sigma: f64,
    /// Drift is `μ(s, a) = drift_scale · a`.
    pub drift_scale: f64,
}

impl ContinuousRingEnv {
    pub fn new(epsilon: f64, sigma: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        assert!(sigma >= 0.0, "sigma must be non-negative");
        Self {
            epsilon,
            sigma,
            drift_scale: 1.0,
        }
    }

    /// The evaluation/control testbed: `ε = 2π/32`, `σ = 0.2`.
    pub fn standard() -> Self {
        Self::new(TAU / 32.0, 0.2)
    }

    pub fn drift(&self, _s: f64, action: usize) -> f64 {
        self.drift_scale * action_sign(action)
    }

    /// One transition with the noise draw supplied by the caller.
    pub fn step_with_noise(&self, s: f64, action: usize, z: f64) -> (f64, f64) {
        let next = wrap_angle(
            s + self.drift(s, action) * self.epsilon + self.sigma * self.epsilon.sqrt() * z,
        );
        (next, ring_reward(next))
    }
}

impl Environment for ContinuousRingEnv {
    fn name(&self) -> &'static str {
        "continuous-ring"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&self, rng: &mut SimRng) -> Vec<f64> {
        use rand::Rng;
        vec![rng.gen::<f64>() * TAU]
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut SimRng) -> Result<Step> {
        self.check_action(action)?;
        let z = standard_normal(rng);
        let (next, reward) = self.step_with_noise(state[0], action, z);
        Ok(Step {
            next: vec![next],
            reward,
            terminal: false,
        })
    }

    fn project(&self, state: &[f64]) -> Vec<f64> {
        vec![wrap_angle(state[0])]
    }
}

/// The ring discretized to the grid `{2πk/n}`; the continuous move is snapped
/// to the nearest grid point in circular distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularRingEnv {
    pub n: usize,
    pub epsilon: f64,
    pub sigma: f64,
}

impl TabularRingEnv {
    pub fn new(n: usize, epsilon: f64, sigma: f64) -> Self {
        assert!(n >= 2, "a ring needs at least two states");
        assert!(epsilon > 0.0, "epsilon must be positive");
        assert!(sigma >= 0.0, "sigma must be non-negative");
        Self { n, epsilon, sigma }
    }

    /// The tabular testbed: 32 states, `σ = 1`, `ε = 1`.
    pub fn standard() -> Self {
        Self::new(32, 1.0, 1.0)
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn grid_point(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.grid_point(k)).collect()
    }

    /// Index of the grid point closest to `s` in circular distance.
    pub fn index_of(&self, s: f64) -> usize {
        let k = (s * self.n as f64 / TAU).round() as i64;
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn snap(&self, s: f64) -> f64 {
        self.grid_point(self.index_of(s))
    }

    /// `μ(s, a) = (2π/n)·a`: one grid cell per unit time.
    pub fn drift(&self, _s: f64, action: usize) -> f64 {
        self.spacing() * action_sign(action)
    }

    pub fn step_with_noise(&self, s: f64, action: usize, z: f64) -> (f64, f64) {
        let moved = s + self.drift(s, action) * self.epsilon + self.sigma * self.epsilon.sqrt() * z;
        let next = self.snap(moved);
        (next, ring_reward(next))
    }

    /// Exact transition probabilities `P^a(s_i, ·)` of the snapped Gaussian
    /// move, summing the Gaussian mass of every arc that snaps to each grid
    /// point over all windings of the ring.
    pub fn transition_row(&self, from: usize, action: usize) -> Vec<f64> {
        let n = self.n;
        let h = self.spacing();
        let mean = self.drift(0.0, action) * self.epsilon;
        let sd = self.sigma * self.epsilon.sqrt();
        let mut row = vec![0.0; n];
        if sd == 0.0 {
            let to = self.index_of(self.grid_point(from) + mean);
            row[to] = 1.0;
            return row;
        }
        let cdf = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
        let windings = ((10.0 * sd + mean.abs()) / TAU).ceil() as i64 + 1;
        for (k, p) in row.iter_mut().enumerate() {
            let offset = (k as f64 - from as f64) * h;
            for w in -windings..=windings {
                let centre = offset + w as f64 * TAU - mean;
                *p += cdf((centre + 0.5 * h) / sd) - cdf((centre - 0.5 * h) / sd);
            }
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
        row
    }
}

impl Environment for TabularRingEnv {
    fn name(&self) -> &'static str {
        "tabular-ring"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&self, rng: &mut SimRng) -> Vec<f64> {
        use rand::Rng;
        vec![self.grid_point(rng.gen_range(0..self.n))]
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut SimRng) -> Result<Step> {
        self.check_action(action)?;
        let z = standard_normal(rng);
        let (next, reward) = self.step_with_noise(state[0], action, z);
        Ok(Step {
            next: vec![next],
            reward,
            terminal: false,
        })
    }

    fn project(&self, state: &[f64]) -> Vec<f64> {
        vec![self.snap(state[0])]
    }
}
