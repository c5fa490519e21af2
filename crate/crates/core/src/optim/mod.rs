//! Optimizers, minibatching, replay and the training loops.

mod batch;
mod schedule;
mod train;

pub use batch::{sample_batch, ReplayBuffer, WindowAssembler};
pub use schedule::Schedule;
pub use train::{train_offline, train_online, OnlineSettings, TrainSettings, TrainStats};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

/// Optimizer choice as written in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerSpec {
    Sgd {
        lr: Schedule,
    },
    Adam {
        lr: Schedule,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

impl OptimizerSpec {
    pub fn sgd(lr: f64) -> Self {
        OptimizerSpec::Sgd {
            lr: Schedule::constant(lr),
        }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerSpec::Adam {
            lr: Schedule::constant(lr),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }

    pub fn build(&self, dim: usize) -> Optimizer {
        match self {
            OptimizerSpec::Sgd { lr } => Optimizer::Sgd { lr: lr.clone() },
            OptimizerSpec::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => Optimizer::Adam {
                lr: lr.clone(),
                state: AdamState::new(dim, *beta1, *beta2, *eps),
            },
        }
    }
}

/// Adam moments and step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

/// `θ ← θ − η·g`.
pub fn sgd_step(theta: &mut [f64], grad: &[f64], eta: f64) {
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= eta * g;
    }
}

/// One bias-corrected Adam step.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], grad: &[f64], eta: f64) {
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] -= eta * m_hat / (v_hat.sqrt() + state.eps);
    }
}

/// Optimizer with its running state.
#[derive(Clone, Debug)]
pub enum Optimizer {
    Sgd { lr: Schedule },
    Adam { lr: Schedule, state: AdamState },
}

impl Optimizer {
    /// Applies the batch gradient for update `k` (1-based). Refuses
    /// non-finite gradients and reports the update index.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], k: u64) -> Result<()> {
        if grad.len() != theta.len() {
            return Err(Error::Dimension {
                expected: theta.len(),
                actual: grad.len(),
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                step: k,
            });
        }
        match self {
            Optimizer::Sgd { lr } => sgd_step(theta, grad, lr.value(k)),
            Optimizer::Adam { lr, state } => adam_step(state, theta, grad, lr.value(k)),
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                what: "parameters",
                step: k,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_half_step() {
        let mut theta = vec![1.0, -2.0];
        sgd_step(&mut theta, &[2.0, 4.0], 0.5);
        assert_eq!(theta, vec![0.0, -4.0]);
    }

    #[test]
    fn adam_first_step_closed_form() {
        let g = [0.3, -2.0, 1e-3];
        let mut theta = vec![0.0; 3];
        let mut st = AdamState::new(3, 0.9, 0.999, 1e-8);
        adam_step(&mut st, &mut theta, &g, 1e-3);
        for i in 0..3 {
            let expected = -1e-3 * g[i] / (g[i].abs() + 1e-8);
            assert!((theta[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_two_steps_closed_form() {
        let g = 0.7;
        let (b1, b2, eps, eta) = (0.9, 0.999, 1e-8, 0.01);
        let mut theta = vec![0.0];
        let mut st = AdamState::new(1, b1, b2, eps);
        adam_step(&mut st, &mut theta, &[g], eta);
        let first = theta[0];
        adam_step(&mut st, &mut theta, &[g], eta);
        let m2 = (1.0 - b1) * g * (1.0 + b1);
        let v2 = (1.0 - b2) * g * g * (1.0 + b2);
        let step2 = eta * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
        assert!((theta[0] - (first - step2)).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_never_moves() {
        let mut opt = OptimizerSpec::adam(0.1).build(2);
        let mut theta = vec![0.5, -0.5];
        for k in 1..=10 {
            opt.step(&mut theta, &[0.0, 0.0], k).unwrap();
        }
        assert_eq!(theta, vec![0.5, -0.5]);
    }

    #[test]
    fn rejects_non_finite() {
        let mut opt = OptimizerSpec::sgd(0.1).build(1);
        let err = opt.step(&mut [0.0], &[f64::NAN], 7).unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 7, .. }));
    }
}
