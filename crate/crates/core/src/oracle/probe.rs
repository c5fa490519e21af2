use serde::{Deserialize, Serialize};

use super::{expected_residual, ExactModel};
use crate::approx::{grad_residual, residual, QApproximator, Target};
use crate::estimators::{
    Bff, EstimatorContext, GradientEstimator, SampleCloning, UncorrelatedSampling,
};
use crate::mdp::{generate_trajectory, Environment, Policy, TabularRingEnv};
use crate::rng::{seeded, streams};
use crate::{Error, Result};

/// Expected gradients of the three single-sample estimators under a model,
/// averaged uniformly over `(s, a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expectations {
    /// `E[F]`, enumerated over independent pairs of next states.
    pub us: Vec<f64>,
    /// `E[F̃]`.
    pub sc: Vec<f64>,
    /// `E[F̂]`, enumerated over `(s_{m+1}, a_{m+1}, s_{m+2})`.
    pub bff: Vec<f64>,
    /// `E[δ ∇δ]` assembled from the model's `δ` and `∇δ`.
    pub delta_grad: Vec<f64>,
    /// `E|δ|`.
    pub mean_abs_delta: f64,
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Exact expectations on a ring model. `behaviour` picks `a_{m+1}` for the
/// borrowed step. The surrogate `s_m + Δs_{m+1}` on the grid is index
/// `s + k₂ − k₁ (mod n)`.
pub fn enumerate_expectations(
    model: &ExactModel,
    q: &QApproximator,
    target: Target<'_>,
    behaviour: &Policy,
    gamma: f64,
) -> Expectations {
    let (ns, na) = (model.num_states(), model.num_actions);
    let d = q.num_params();
    let rho = 1.0 / (ns * na) as f64;
    let delta = expected_residual(model, q, target, gamma);
    let behave: Vec<Vec<f64>> = (0..ns).map(|k| behaviour.probs(&model.state(k))).collect();
    let mut out = Expectations {
        us: vec![0.0; d],
        sc: vec![0.0; d],
        bff: vec![0.0; d],
        delta_grad: vec![0.0; d],
        mean_abs_delta: 0.0,
    };
    for s in 0..ns {
        let state = model.state(s);
        for a in 0..na {
            let row = model.row(s, a);
            let j: Vec<f64> = (0..ns)
                .map(|k| {
                    let r = model.transition_reward(s, a, k);
                    residual(q, target, &state, a, &model.state(k), r, gamma, false).value
                })
                .collect();
            let g: Vec<Vec<f64>> = (0..ns)
                .map(|k| grad_residual(q, target, &state, a, &model.state(k), gamma, false))
                .collect();

            for k in 0..ns {
                for l in 0..ns {
                    axpy(rho * row[k] * row[l] * j[k], &g[l], &mut out.us);
                }
                axpy(rho * row[k] * j[k], &g[k], &mut out.sc);
            }

            // weight on each surrogate index, per first next state
            for k in 0..ns {
                if row[k] == 0.0 {
                    continue;
                }
                let mut surrogate = vec![0.0; ns];
                for (a1, &pb) in behave[k].iter().enumerate() {
                    for (l, &p2) in model.row(k, a1).iter().enumerate() {
                        surrogate[(s + l + ns - k) % ns] += pb * p2;
                    }
                }
                for (idx, w) in surrogate.iter().enumerate() {
                    if *w != 0.0 {
                        axpy(rho * row[k] * j[k] * w, &g[idx], &mut out.bff);
                    }
                }
            }

            let dj = delta[s * na + a];
            let mut grad_delta = vec![0.0; d];
            for (l, gl) in g.iter().enumerate() {
                axpy(row[l], gl, &mut grad_delta);
            }
            axpy(rho * dj, &grad_delta, &mut out.delta_grad);
            out.mean_abs_delta += rho * dj.abs();
        }
    }
    out
}

fn norm_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMethod {
    Enumeration,
    MonteCarlo,
}

/// One `(ε, snapshot)` cell of the probe. Biases are Euclidean norms of
/// expected-gradient differences against uncorrelated sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasProbeRecord {
    pub epsilon: f64,
    pub snapshot: String,
    pub bff_bias: f64,
    pub sc_bias: f64,
    /// Standard errors; zero under enumeration.
    pub bff_se: f64,
    pub sc_se: f64,
    pub mean_abs_delta: f64,
    /// Monte Carlo windows; zero under enumeration.
    pub samples: u64,
    /// The measured bias does not exceed its standard error.
    pub bff_inconclusive: bool,
    pub sc_inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasProbeReport {
    pub method: ProbeMethod,
    pub gamma: f64,
    pub records: Vec<BiasProbeRecord>,
}

impl BiasProbeReport {
    pub fn record(&self, epsilon: f64, snapshot: &str) -> Option<&BiasProbeRecord> {
        self.records
            .iter()
            .find(|r| r.snapshot == snapshot && (r.epsilon - epsilon).abs() < 1e-15)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Enumerated probe over a family of tabular rings (one per `ε`) and a set
/// of named snapshots.
pub fn bias_probe_enumerated(
    envs: &[TabularRingEnv],
    snapshots: &[(String, QApproximator)],
    target: Target<'_>,
    behaviour: &Policy,
    gamma: f64,
) -> Result<BiasProbeReport> {
    if envs.is_empty() || snapshots.is_empty() {
        return Err(Error::config(
            "bias probe needs at least one environment and one snapshot",
        ));
    }
    let mut records = Vec::new();
    for env in envs {
        let model = ExactModel::analytic(env);
        for (name, q) in snapshots {
            let e = enumerate_expectations(&model, q, target, behaviour, gamma);
            records.push(BiasProbeRecord {
                epsilon: env.epsilon,
                snapshot: name.clone(),
                bff_bias: norm_diff(&e.bff, &e.us),
                sc_bias: norm_diff(&e.sc, &e.us),
                bff_se: 0.0,
                sc_se: 0.0,
                mean_abs_delta: e.mean_abs_delta,
                samples: 0,
                bff_inconclusive: false,
                sc_inconclusive: false,
            });
        }
    }
    Ok(BiasProbeReport {
        method: ProbeMethod::Enumeration,
        gamma,
        records,
    })
}

struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Self {
            sum: vec![0.0; d],
            sum_sq: vec![0.0; d],
        }
    }

    fn add(&mut self, x: &[f64], y: &[f64]) {
        for i in 0..x.len() {
            let v = x[i] - y[i];
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
        }
    }

    /// Norm of the mean and the standard error of that mean vector.
    fn finish(&self, n: f64) -> (f64, f64) {
        let mut norm = 0.0;
        let mut var = 0.0;
        for (s, sq) in self.sum.iter().zip(&self.sum_sq) {
            let mean = s / n;
            norm += mean * mean;
            var += (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
        }
        (norm.sqrt(), (var / n).sqrt())
    }
}

/// Monte Carlo probe on a simulator: windows come from one stationary
/// trajectory of `behaviour`, and every window is scored by all three
/// estimators so the differences are paired.
#[allow(clippy::too_many_arguments)]
pub fn bias_probe_monte_carlo(
    env: &dyn Environment,
    epsilon: f64,
    snapshots: &[(String, QApproximator)],
    target: Target<'_>,
    behaviour: &Policy,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<BiasProbeReport> {
    if samples < 2 {
        return Err(Error::config(
            "Monte Carlo probe needs at least two samples",
        ));
    }
    let traj = generate_trajectory(
        env,
        behaviour,
        samples + 1,
        &mut seeded(seed, streams::TRAJECTORY),
    )?;
    let starts = traj.valid_starts(1);
    const REDRAWS: usize = 8;
    let mut records = Vec::new();
    for (name, q) in snapshots {
        let ctx = EstimatorContext {
            q,
            target,
            gamma,
            env,
        };
        let mut rng = seeded(seed, streams::PROBE);
        let d = q.num_params();
        let (mut bff_m, mut sc_m) = (Moments::new(d), Moments::new(d));
        let mut abs_delta = 0.0;
        for &m in &starts {
            let w = traj.window(m, 1)?;
            let f = UncorrelatedSampling.estimate(&ctx, &w, &mut rng)?;
            let sc = SampleCloning.estimate(&ctx, &w, &mut rng)?;
            let bff = Bff.estimate(&ctx, &w, &mut rng)?;
            bff_m.add(&bff.grad, &f.grad);
            sc_m.add(&sc.grad, &f.grad);
            let mut delta = 0.0;
            for _ in 0..REDRAWS {
                let step = env.step(w.current(), w.action, &mut rng)?;
                delta += residual(
                    q,
                    target,
                    w.current(),
                    w.action,
                    &step.next,
                    step.reward,
                    gamma,
                    step.terminal,
                )
                .value;
            }
            abs_delta += (delta / REDRAWS as f64).abs();
        }
        let n = starts.len() as f64;
        let (bff_bias, bff_se) = bff_m.finish(n);
        let (sc_bias, sc_se) = sc_m.finish(n);
        records.push(BiasProbeRecord {
            epsilon,
            snapshot: name.clone(),
            bff_bias,
            sc_bias,
            bff_se,
            sc_se,
            mean_abs_delta: abs_delta / n,
            samples: starts.len() as u64,
            bff_inconclusive: bff_bias <= bff_se,
            sc_inconclusive: sc_bias <= sc_se,
        });
    }
    Ok(BiasProbeReport {
        method: ProbeMethod::MonteCarlo,
        gamma,
        records,
    })
}
