//! Q-function representations and Bellman residuals.
//!
//! Both representations expose a flat parameter vector `θ`, action values
//! `Q(s, ·)` and vector–Jacobian products `Σ_b c_b ∇_θ Q(s, b)`, which is all
//! the residual gradients need.

mod checkpoint;
mod mlp;
mod tabular;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use mlp::{Activation, Featurization, LayerSpec, MlpArchitecture, MlpQ};
pub use tabular::TabularQ;

use serde::{Deserialize, Serialize};

use crate::mdp::Policy;
use crate::rng::SimRng;

/// Serializable description of an approximator's shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Architecture {
    Tabular { states: usize, actions: usize },
    Mlp(MlpArchitecture),
}

impl Architecture {
    pub fn num_params(&self) -> usize {
        match self {
            Architecture::Tabular { states, actions } => states * actions,
            Architecture::Mlp(arch) => arch.num_params(),
        }
    }

    /// Tabular tables start at zero; networks use the seeded uniform scheme.
    pub fn init(&self, rng: &mut SimRng) -> QApproximator {
        match self {
            Architecture::Tabular { states, actions } => {
                QApproximator::Tabular(TabularQ::zeros(*states, *actions))
            }
            Architecture::Mlp(arch) => QApproximator::Mlp(MlpQ::init(arch.clone(), rng)),
        }
    }

    pub fn from_params(&self, params: Vec<f64>) -> QApproximator {
        match self {
            Architecture::Tabular { states, actions } => {
                QApproximator::Tabular(TabularQ::from_values(*states, *actions, params))
            }
            Architecture::Mlp(arch) => QApproximator::Mlp(MlpQ::from_params(arch.clone(), params)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QApproximator {
    Tabular(TabularQ),
    Mlp(MlpQ),
}

impl QApproximator {
    pub fn architecture(&self) -> Architecture {
        match self {
            QApproximator::Tabular(t) => Architecture::Tabular {
                states: t.num_states(),
                actions: t.num_actions(),
            },
            QApproximator::Mlp(m) => Architecture::Mlp(m.architecture().clone()),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            QApproximator::Tabular(t) => t.num_actions(),
            QApproximator::Mlp(m) => m.num_actions(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params().len()
    }

    pub fn params(&self) -> &[f64] {
        match self {
            QApproximator::Tabular(t) => t.values(),
            QApproximator::Mlp(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            QApproximator::Tabular(t) => t.values_mut(),
            QApproximator::Mlp(m) => m.params_mut(),
        }
    }

    /// `Q(s, ·)`.
    pub fn evaluate(&self, state: &[f64]) -> Vec<f64> {
        match self {
            QApproximator::Tabular(t) => t.row(t.index_of(state)).to_vec(),
            QApproximator::Mlp(m) => m.values(state),
        }
    }

    /// Adds `Σ_b cot_b ∇_θ Q(s, b)` to `grad`.
    pub fn vjp(&self, state: &[f64], cot: &[f64], grad: &mut [f64]) {
        match self {
            QApproximator::Tabular(t) => {
                let s = t.index_of(state);
                for (b, &c) in cot.iter().enumerate() {
                    grad[t.entry(s, b)] += c;
                }
            }
            QApproximator::Mlp(m) => m.vjp(state, cot, grad),
        }
    }
}

/// How the next state is bootstrapped: the evaluation policy's average or
/// the greedy maximum.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Eval(&'a Policy),
    Ctrl,
}

impl Target<'_> {
    pub fn kind(&self) -> ResidualKind {
        match self {
            Target::Eval(_) => ResidualKind::Eval,
            Target::Ctrl => ResidualKind::Ctrl,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualKind {
    Eval,
    Ctrl,
}

/// A single-sample Bellman residual `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub kind: ResidualKind,
}

/// `Σ_a π(a|s') Q(s', a)` or `max_a Q(s', a)`.
pub fn bootstrap(q: &QApproximator, target: Target<'_>, next: &[f64]) -> f64 {
    let values = q.evaluate(next);
    match target {
        Target::Eval(policy) => {
            let probs = policy.probs(next);
            values.iter().zip(&probs).map(|(v, p)| v * p).sum()
        }
        Target::Ctrl => values[crate::mdp::greedy_action(&values)],
    }
}

/// `j = r + γ·bootstrap(s') − Q(s, a)`; the bootstrap is dropped when `s'` is
/// absorbing.
#[allow(clippy::too_many_arguments)]
pub fn residual(
    q: &QApproximator,
    target: Target<'_>,
    state: &[f64],
    action: usize,
    next: &[f64],
    reward: f64,
    gamma: f64,
    terminal: bool,
) -> Residual {
    let boot = if terminal {
        0.0
    } else {
        gamma * bootstrap(q, target, next)
    };
    Residual {
        value: reward + boot - q.evaluate(state)[action],
        kind: target.kind(),
    }
}

pub fn residual_eval(
    q: &QApproximator,
    policy: &Policy,
    state: &[f64],
    action: usize,
    next: &[f64],
    reward: f64,
    gamma: f64,
) -> Residual {
    residual(
        q,
        Target::Eval(policy),
        state,
        action,
        next,
        reward,
        gamma,
        false,
    )
}

pub fn residual_ctrl(
    q: &QApproximator,
    state: &[f64],
    action: usize,
    next: &[f64],
    reward: f64,
    gamma: f64,
) -> Residual {
    residual(q, Target::Ctrl, state, action, next, reward, gamma, false)
}

/// Adds `weight·∇_θ j(s, a, s'')` to `grad`, where
/// `∇_θ j = γ·∇_θ bootstrap(s'') − ∇_θ Q(s, a)`.
///
/// For the greedy target the bootstrap gradient flows through the lowest-index
/// maximizing action only.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_grad_residual(
    q: &QApproximator,
    target: Target<'_>,
    state: &[f64],
    action: usize,
    surrogate: &[f64],
    gamma: f64,
    terminal: bool,
    weight: f64,
    grad: &mut [f64],
) {
    let k = q.num_actions();
    if !terminal {
        let mut cot = vec![0.0; k];
        match target {
            Target::Eval(policy) => {
                policy.probs_into(surrogate, &mut cot);
                cot.iter_mut().for_each(|c| *c = weight * (gamma * *c));
            }
            Target::Ctrl => {
                let values = q.evaluate(surrogate);
                cot[crate::mdp::greedy_action(&values)] = weight * gamma;
            }
        }
        q.vjp(surrogate, &cot, grad);
    }
    let mut cot = vec![0.0; k];
    cot[action] = -weight;
    q.vjp(state, &cot, grad);
}

/// `∇_θ j(s, a, s'')` as a fresh vector.
pub fn grad_residual(
    q: &QApproximator,
    target: Target<'_>,
    state: &[f64],
    action: usize,
    surrogate: &[f64],
    gamma: f64,
    terminal: bool,
) -> Vec<f64> {
    let mut grad = vec![0.0; q.num_params()];
    accumulate_grad_residual(
        q, target, state, action, surrogate, gamma, terminal, 1.0, &mut grad,
    );
    grad
}
