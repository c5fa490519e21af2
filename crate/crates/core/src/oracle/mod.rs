//! Ground truth: exact tabular models and solvers, long-run references for
//! the continuous ring, and the estimator bias probe.

mod probe;

pub use probe::{
    bias_probe_enumerated, bias_probe_monte_carlo, enumerate_expectations, BiasProbeRecord,
    BiasProbeReport, Expectations, ProbeMethod,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::approx::{bootstrap, residual, Architecture, QApproximator, TabularQ, Target};
use crate::estimators::UncorrelatedSampling;
use crate::mdp::{generate_trajectory, ring_reward, Environment, Policy, TabularRingEnv};
use crate::optim::{train_offline, TrainSettings};
use crate::rng::{seeded, streams};
use crate::{Error, Result};

/// Transition tensor and rewards of a finite MDP whose states are points on
/// the ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactModel {
    /// Representative angle of each state index.
    pub states: Vec<f64>,
    pub num_actions: usize,
    /// `P^a(s, s')` at `[(s·A + a)·S + s']`.
    pub transitions: Vec<f64>,
    /// Expected reward `R(s, a)` at `[s·A + a]`.
    pub rewards: Vec<f64>,
    /// Reward of landing in `s'`, when it depends on `s'` only.
    pub next_rewards: Option<Vec<f64>>,
    /// Monte Carlo draws per `(s, a)`; `None` for an exact kernel.
    pub samples_per_entry: Option<usize>,
}

impl ExactModel {
    pub fn from_parts(
        states: Vec<f64>,
        num_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
    ) -> Result<Self> {
        let s = states.len();
        if transitions.len() != s * num_actions * s {
            return Err(Error::Dimension {
                expected: s * num_actions * s,
                actual: transitions.len(),
            });
        }
        if rewards.len() != s * num_actions {
            return Err(Error::Dimension {
                expected: s * num_actions,
                actual: rewards.len(),
            });
        }
        let model = Self {
            states,
            num_actions,
            transitions,
            rewards,
            next_rewards: None,
            samples_per_entry: None,
        };
        for s in 0..model.num_states() {
            for a in 0..num_actions {
                let row = model.row(s, a);
                let total: f64 = row.iter().sum();
                if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::config(format!(
                        "transition row ({s}, {a}) is not a distribution"
                    )));
                }
            }
        }
        Ok(model)
    }

    /// Exact kernel of the snapped Gaussian move.
    pub fn analytic(env: &TabularRingEnv) -> Self {
        let (n, na) = (env.n, 2);
        let mut transitions = Vec::with_capacity(n * na * n);
        for s in 0..n {
            for a in 0..na {
                transitions.extend(env.transition_row(s, a));
            }
        }
        Self::with_ring_rewards(env, transitions, None)
    }

    /// Monte Carlo estimate with `samples` draws per `(s, a)`.
    pub fn estimate(env: &TabularRingEnv, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::config("model estimation needs at least one sample"));
        }
        let (n, na) = (env.n, 2);
        let mut rng = seeded(seed, streams::MODEL);
        let mut transitions = vec![0.0; n * na * n];
        for s in 0..n {
            let state = [env.grid_point(s)];
            for a in 0..na {
                let base = (s * na + a) * n;
                for _ in 0..samples {
                    let next = env.resample_next(&state, a, &mut rng)?;
                    transitions[base + env.index_of(next[0])] += 1.0;
                }
                for p in &mut transitions[base..base + n] {
                    *p /= samples as f64;
                }
            }
        }
        Ok(Self::with_ring_rewards(env, transitions, Some(samples)))
    }

    fn with_ring_rewards(
        env: &TabularRingEnv,
        transitions: Vec<f64>,
        samples: Option<usize>,
    ) -> Self {
        let states = env.grid();
        let next_rewards: Vec<f64> = states.iter().map(|&s| ring_reward(s)).collect();
        let n = states.len();
        let mut model = Self {
            states,
            num_actions: 2,
            transitions,
            rewards: vec![0.0; n * 2],
            next_rewards: Some(next_rewards),
            samples_per_entry: samples,
        };
        for s in 0..n {
            for a in 0..2 {
                model.rewards[s * 2 + a] = (0..n)
                    .map(|k| model.p(s, a, k) * model.transition_reward(s, a, k))
                    .sum();
            }
        }
        model
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let n = self.num_states();
        let base = (s * self.num_actions + a) * n;
        &self.transitions[base..base + n]
    }

    pub fn p(&self, s: usize, a: usize, next: usize) -> f64 {
        self.row(s, a)[next]
    }

    /// `r(s, a, s')`.
    pub fn transition_reward(&self, s: usize, a: usize, next: usize) -> f64 {
        match &self.next_rewards {
            Some(r) => r[next],
            None => self.rewards[s * self.num_actions + a],
        }
    }

    pub fn state(&self, s: usize) -> [f64; 1] {
        [self.states[s]]
    }

    fn policy_matrix(&self, policy: &Policy) -> Vec<Vec<f64>> {
        self.states.iter().map(|&s| policy.probs(&[s])).collect()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Singular(format!(
            "discount γ = {gamma} must lie in [0, 1)"
        )));
    }
    Ok(())
}

/// Solves `Q = R + γ P^π Q` with a dense LU factorization.
pub fn exact_q_eval_tabular(model: &ExactModel, policy: &Policy, gamma: f64) -> Result<TabularQ> {
    check_gamma(gamma)?;
    let (ns, na) = (model.num_states(), model.num_actions);
    if policy.num_actions() != na {
        return Err(Error::Dimension {
            expected: na,
            actual: policy.num_actions(),
        });
    }
    let pi = model.policy_matrix(policy);
    let dim = ns * na;
    let mut a_mat = DMatrix::<f64>::identity(dim, dim);
    for s in 0..ns {
        for a in 0..na {
            let row = s * na + a;
            for (k, &p) in model.row(s, a).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for b in 0..na {
                    a_mat[(row, k * na + b)] -= gamma * p * pi[k][b];
                }
            }
        }
    }
    let rhs = DVector::from_column_slice(&model.rewards);
    let q = a_mat
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Bellman evaluation system".into()))?;
    let check = (&a_mat * &q - &rhs).amax();
    if !check.is_finite() || check > 1e-10 {
        return Err(Error::Singular(format!(
            "solve residual {check:e} exceeds 1e-10"
        )));
    }
    Ok(TabularQ::from_values(ns, na, q.as_slice().to_vec()))
}

/// Value iteration for `Q* = R + γ P max Q*`, stopping when the sup-norm
/// change drops to `tol`. Returns the table and the per-sweep changes.
pub fn exact_q_ctrl_tabular(
    model: &ExactModel,
    gamma: f64,
    tol: f64,
) -> Result<(TabularQ, Vec<f64>)> {
    check_gamma(gamma)?;
    let (ns, na) = (model.num_states(), model.num_actions);
    let mut q = vec![0.0; ns * na];
    let mut changes = Vec::new();
    loop {
        let v: Vec<f64> = (0..ns)
            .map(|k| {
                q[k * na..(k + 1) * na]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut next = vec![0.0; ns * na];
        for s in 0..ns {
            for a in 0..na {
                let ev: f64 = model.row(s, a).iter().zip(&v).map(|(p, v)| p * v).sum();
                next[s * na + a] = model.rewards[s * na + a] + gamma * ev;
            }
        }
        let change = next
            .iter()
            .zip(&q)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        q = next;
        changes.push(change);
        if change <= tol || changes.len() > 1_000_000 {
            break;
        }
    }
    Ok((TabularQ::from_values(ns, na, q), changes))
}

/// `δ(s, a) = E[j | s, a]` under the model, indexed `[s·A + a]`.
pub fn expected_residual(
    model: &ExactModel,
    q: &QApproximator,
    target: Target<'_>,
    gamma: f64,
) -> Vec<f64> {
    let (ns, na) = (model.num_states(), model.num_actions);
    let boot: Vec<f64> = (0..ns)
        .map(|k| bootstrap(q, target, &model.state(k)))
        .collect();
    let mut delta = vec![0.0; ns * na];
    for s in 0..ns {
        let values = q.evaluate(&model.state(s));
        for a in 0..na {
            let ev: f64 = model.row(s, a).iter().zip(&boot).map(|(p, b)| p * b).sum();
            delta[s * na + a] = model.rewards[s * na + a] + gamma * ev - values[a];
        }
    }
    delta
}

/// Same as [`expected_residual`] but summing `j` transition by transition.
pub fn expected_residual_by_transition(
    model: &ExactModel,
    q: &QApproximator,
    target: Target<'_>,
    gamma: f64,
) -> Vec<f64> {
    let (ns, na) = (model.num_states(), model.num_actions);
    let mut delta = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            delta[s * na + a] = (0..ns)
                .map(|k| {
                    let r = model.transition_reward(s, a, k);
                    model.p(s, a, k)
                        * residual(
                            q,
                            target,
                            &model.state(s),
                            a,
                            &model.state(k),
                            r,
                            gamma,
                            false,
                        )
                        .value
                })
                .sum();
        }
    }
    delta
}

/// Settings of a long uncorrelated-sampling run used as the reference `Q`
/// when no exact model exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSettings {
    pub trajectory_len: usize,
    pub train: TrainSettings,
    pub seed: u64,
}

/// Trains the reference by uncorrelated sampling on a fresh trajectory
/// generated by `behaviour`.
pub fn reference_q_continuous(
    env: &dyn Environment,
    behaviour: &Policy,
    target: Target<'_>,
    architecture: &Architecture,
    settings: &ReferenceSettings,
) -> Result<QApproximator> {
    if !env.supports_resampling() {
        return Err(Error::Unsupported {
            estimator: "us".into(),
            reason: format!("{} cannot resample next states", env.name()),
        });
    }
    let mut rng = seeded(settings.seed, streams::TRAJECTORY);
    let traj = generate_trajectory(env, behaviour, settings.trajectory_len, &mut rng)?;
    let mut q = architecture.init(&mut seeded(settings.seed, streams::INIT));
    let mut us = UncorrelatedSampling;
    train_offline(
        &mut q,
        &mut us,
        env,
        target,
        &traj,
        &settings.train,
        settings.seed,
        &mut |_, _| Ok(()),
    )?;
    Ok(q)
}
