//! Classic-control cart-pole balancing.
//!
//! State is `[x, ẋ, φ, φ̇]`. Action 0 pushes left, action 1 pushes right. The
//! dynamics are integrated with semi-implicit Euler.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Step};
use crate::rng::SimRng;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartPoleEnv {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force: f64,
    pub tau: f64,
    pub x_threshold: f64,
    /// Radians.
    pub angle_threshold: f64,
    pub max_steps: usize,
}

impl Default for CartPoleEnv {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force: 10.0,
            tau: 0.02,
            x_threshold: 2.4,
            angle_threshold: 12.0_f64.to_radians(),
            max_steps: 200,
        }
    }
}

impl CartPoleEnv {
    /// Deterministic one-step integration.
    pub fn integrate(&self, state: &[f64], action: usize) -> [f64; 4] {
        let [x, x_dot, phi, phi_dot] = [state[0], state[1], state[2], state[3]];
        let force = if action == 1 { self.force } else { -self.force };
        let total_mass = self.cart_mass + self.pole_mass;
        let pole_mass_length = self.pole_mass * self.half_length;
        let (sin, cos) = phi.sin_cos();

        let temp = (force + pole_mass_length * phi_dot * phi_dot * sin) / total_mass;
        let phi_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * phi_acc * cos / total_mass;

        let x_dot = x_dot + self.tau * x_acc;
        let x = x + self.tau * x_dot;
        let phi_dot = phi_dot + self.tau * phi_acc;
        let phi = phi + self.tau * phi_dot;
        [x, x_dot, phi, phi_dot]
    }

    pub fn is_failure(&self, state: &[f64]) -> bool {
        state[0].abs() > self.x_threshold || state[2].abs() > self.angle_threshold
    }
}

impl Environment for CartPoleEnv {
    fn name(&self) -> &'static str {
        "cartpole"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&self, rng: &mut SimRng) -> Vec<f64> {
        (0..4).map(|_| rng.gen_range(-0.05..0.05)).collect()
    }

    fn step(&self, state: &[f64], action: usize, _rng: &mut SimRng) -> Result<Step> {
        self.check_action(action)?;
        let next = self.integrate(state, action);
        let terminal = self.is_failure(&next);
        Ok(Step {
            next: next.to_vec(),
            reward: if terminal { 0.0 } else { 1.0 },
            terminal,
        })
    }

    fn is_absorbing(&self, state: &[f64]) -> bool {
        self.is_failure(state)
    }

    fn max_episode_steps(&self) -> Option<usize> {
        Some(self.max_steps)
    }
}
