use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ring::TAU;
use crate::rng::SimRng;
use crate::{Error, Result};

/// A fixed stochastic policy `π(a|s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    /// Ring policy `π(a|s) = 1/2 + a·amplitude·sin(s)` for `a ∈ {−1, +1}`.
    SineRing {
        amplitude: f64,
    },
    Uniform {
        actions: usize,
    },
    /// Per-state action probabilities for a ring grid of `probs.len()` points.
    Table {
        probs: Vec<Vec<f64>>,
    },
}

impl Policy {
    /// The evaluation policy of the ring experiments, `1/2 + a·sin(s)/5`.
    pub fn sine_ring() -> Self {
        Policy::SineRing { amplitude: 0.2 }
    }

    pub fn table(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "policy row {s} is not a distribution: {row:?}"
                )));
            }
        }
        Ok(Policy::Table { probs })
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Policy::SineRing { .. } => 2,
            Policy::Uniform { actions } => *actions,
            Policy::Table { probs } => probs.first().map_or(0, Vec::len),
        }
    }

    /// Writes `π(·|s)` into `out`.
    pub fn probs_into(&self, state: &[f64], out: &mut [f64]) {
        match self {
            Policy::SineRing { amplitude } => {
                let tilt = amplitude * state[0].sin();
                out[0] = 0.5 - tilt;
                out[1] = 0.5 + tilt;
            }
            Policy::Uniform { actions } => out.fill(1.0 / *actions as f64),
            Policy::Table { probs } => {
                let n = probs.len();
                let k = ((state[0] * n as f64 / TAU).round() as i64).rem_euclid(n as i64) as usize;
                out.copy_from_slice(&probs[k]);
            }
        }
    }

    pub fn probs(&self, state: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_actions()];
        self.probs_into(state, &mut out);
        out
    }

    pub fn sample(&self, state: &[f64], rng: &mut SimRng) -> usize {
        let mut probs = [0.0; 8];
        let k = self.num_actions();
        if k <= probs.len() {
            self.probs_into(state, &mut probs[..k]);
            sample_index(&probs[..k], rng)
        } else {
            sample_index(&self.probs(state), rng)
        }
    }
}

fn sample_index(probs: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.len() - 1
}

/// Lowest index attaining the maximum.
pub fn greedy_action(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    best
}

/// Multiplicative ε-decay with a floor: `ε(k) = max(floor, start·decay^k)`
/// after `k` parameter updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    pub start: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            decay: 0.99,
            floor: 0.1,
        }
    }
}

impl ExplorationSchedule {
    pub fn value(&self, updates: u64) -> f64 {
        (self.start * self.decay.powf(updates as f64)).max(self.floor)
    }
}

/// ε-greedy action selection on a vector of action values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGreedy {
    pub schedule: ExplorationSchedule,
}

impl EpsilonGreedy {
    pub fn probs(q_values: &[f64], epsilon: f64) -> Vec<f64> {
        let k = q_values.len() as f64;
        let best = greedy_action(q_values);
        (0..q_values.len())
            .map(|a| epsilon / k + if a == best { 1.0 - epsilon } else { 0.0 })
            .collect()
    }

    pub fn select(q_values: &[f64], epsilon: f64, rng: &mut SimRng) -> usize {
        if rng.gen::<f64>() < epsilon {
            rng.gen_range(0..q_values.len())
        } else {
            greedy_action(q_values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn ring_policy_is_a_distribution() {
        let policy = Policy::sine_ring();
        for k in 0..1000 {
            let s = TAU * k as f64 / 1000.0;
            let p = policy.probs(&[s]);
            assert!(p.iter().all(|&x| x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let top = policy.probs(&[std::f64::consts::FRAC_PI_2]);
        assert!((top[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn table_rows_must_sum_to_one() {
        assert!(Policy::table(vec![vec![0.3, 0.7], vec![0.5, 0.5]]).is_ok());
        assert!(Policy::table(vec![vec![0.3, 0.6]]).is_err());
    }

    #[test]
    fn table_policy_indexes_by_grid_point() {
        let policy = Policy::table(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        assert_eq!(policy.probs(&[0.0]), vec![0.3, 0.7]);
        assert_eq!(policy.probs(&[std::f64::consts::PI]), vec![0.9, 0.1]);
    }

    #[test]
    fn exploration_schedule_decays_to_floor() {
        let schedule = ExplorationSchedule::default();
        let mut prev = f64::INFINITY;
        for k in 0..2000u64 {
            let eps = schedule.value(k);
            assert_eq!(eps, 0.1f64.max(0.99f64.powf(k as f64)));
            assert!(eps <= prev);
            prev = eps;
        }
        assert_eq!(schedule.value(0), 1.0);
        assert_eq!(schedule.value(10_000), 0.1);
    }

    #[test]
    fn greedy_breaks_ties_low() {
        assert_eq!(greedy_action(&[2.0, 2.0]), 0);
        assert_eq!(greedy_action(&[1.0, 3.0, 3.0]), 1);
        let mut rng = seeded(0, 0);
        for _ in 0..100 {
            assert_eq!(EpsilonGreedy::select(&[1.0, 3.0], 0.0, &mut rng), 1);
        }
        let p = EpsilonGreedy::probs(&[1.0, 3.0], 0.1);
        assert!((p[0] - 0.05).abs() < 1e-15 && (p[1] - 0.95).abs() < 1e-15);
    }
}
