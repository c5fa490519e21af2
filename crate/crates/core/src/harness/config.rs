use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::Architecture;
use crate::estimators::EstimatorSpec;
use crate::mdp::{
    CartPoleEnv, ContinuousRingEnv, Environment, ExplorationSchedule, Policy, TabularRingEnv,
};
use crate::optim::{OptimizerSpec, Schedule};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvSpec {
    TabularRing { n: usize, epsilon: f64, sigma: f64 },
    ContinuousRing { epsilon: f64, sigma: f64 },
    CartPole,
}

impl EnvSpec {
    pub fn build(&self) -> Result<Box<dyn Environment>> {
        match *self {
            EnvSpec::TabularRing { n, epsilon, sigma } => {
                if n < 2 || bad_step(epsilon, sigma) {
                    return Err(Error::config("tabular ring needs n ≥ 2, ε > 0, σ ≥ 0"));
                }
                Ok(Box::new(TabularRingEnv::new(n, epsilon, sigma)))
            }
            EnvSpec::ContinuousRing { epsilon, sigma } => {
                if bad_step(epsilon, sigma) {
                    return Err(Error::config("continuous ring needs ε > 0, σ ≥ 0"));
                }
                Ok(Box::new(ContinuousRingEnv::new(epsilon, sigma)))
            }
            EnvSpec::CartPole => Ok(Box::new(CartPoleEnv::default())),
        }
    }

    pub fn tabular(&self) -> Option<TabularRingEnv> {
        match *self {
            EnvSpec::TabularRing { n, epsilon, sigma } => {
                Some(TabularRingEnv::new(n, epsilon, sigma))
            }
            _ => None,
        }
    }
}

fn bad_step(epsilon: f64, sigma: f64) -> bool {
    epsilon.is_nan() || epsilon <= 0.0 || sigma.is_nan() || sigma < 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Eval,
    Ctrl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    /// `‖Q − Q*‖₂ / ‖Q*‖₂` over every table entry, or over `points`
    /// uniform ring angles × all actions for continuous states.
    RelErrGrid {
        #[serde(default = "default_grid_points")]
        points: usize,
    },
    /// Total reward per training episode.
    EpisodeReward,
    /// Mean squared residual `Ê[j²]` over held-out windows.
    EmpiricalBellmanResidual { windows: usize },
}

fn default_grid_points() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleSpec {
    None,
    /// Monte Carlo model, then a linear solve (eval) or value iteration
    /// (ctrl).
    ExactModel {
        samples: usize,
        seed: u64,
        #[serde(default = "default_vi_tol")]
        tol: f64,
    },
    /// Long uncorrelated-sampling run.
    Reference {
        trajectory_len: usize,
        batch_size: usize,
        lr: Schedule,
        updates: u64,
        seed: u64,
    },
    /// Previously written checkpoint.
    Checkpoint {
        path: PathBuf,
    },
}

fn default_vi_tol() -> f64 {
    1e-10
}

/// One estimator arm of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub estimator: EstimatorSpec,
    /// Overrides the experiment optimizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
    /// Overrides the experiment seeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

impl ArmSpec {
    pub fn new(estimator: EstimatorSpec) -> Self {
        Self {
            estimator,
            optimizer: None,
            seeds: None,
        }
    }

    pub fn label(&self) -> String {
        self.estimator.label()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Training {
    /// Minibatches from one fixed trajectory per seed.
    Offline {
        trajectory_len: usize,
        batch_size: usize,
        /// Defaults to `trajectory_len / batch_size`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        updates: Option<u64>,
        eval_every: u64,
    },
    /// ε-greedy interaction with experience replay.
    Online {
        episodes: usize,
        batch_size: usize,
        replay_capacity: usize,
        #[serde(default)]
        exploration: ExplorationSchedule,
    },
}

/// Larger settings applied by `at_paper_scale`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PaperScale {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub updates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_trajectory_len: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvSpec,
    pub mode: Mode,
    /// Evaluation target policy (eval mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    /// Policy generating offline data; defaults to `policy` in eval mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behaviour: Option<Policy>,
    pub gamma: f64,
    pub approximator: Architecture,
    pub optimizer: OptimizerSpec,
    pub training: Training,
    pub arms: Vec<ArmSpec>,
    pub seeds: Vec<u64>,
    pub metric: MetricSpec,
    pub oracle: OracleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_scale: Option<PaperScale>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.toml` or `.json` by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format {
            what: "config",
            reason: e.to_string(),
        })
    }

    /// Policy that generates the data.
    pub fn behaviour_policy(&self) -> Result<Policy> {
        match (&self.behaviour, &self.policy, self.mode) {
            (Some(b), _, _) => Ok(b.clone()),
            (None, Some(p), Mode::Eval) => Ok(p.clone()),
            (None, _, Mode::Ctrl) => Ok(Policy::Uniform {
                actions: self.num_actions()?,
            }),
            (None, None, Mode::Eval) => Err(Error::config("eval mode needs a `policy`")),
        }
    }

    fn num_actions(&self) -> Result<usize> {
        Ok(self.env.build()?.num_actions())
    }

    /// Applies the paper-scale overrides, if any.
    pub fn at_paper_scale(mut self) -> Self {
        let Some(scale) = self.paper_scale.clone() else {
            return self;
        };
        if let Training::Offline {
            trajectory_len,
            updates,
            ..
        } = &mut self.training
        {
            if let Some(t) = scale.trajectory_len {
                *trajectory_len = t;
                *updates = None;
            }
            if scale.updates.is_some() {
                *updates = scale.updates;
            }
        }
        if let (OracleSpec::Reference { trajectory_len, .. }, Some(t)) =
            (&mut self.oracle, scale.oracle_trajectory_len)
        {
            *trajectory_len = t;
        }
        self
    }

    /// Overrides every arm's seeds with `[seed]`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        for arm in &mut self.arms {
            arm.seeds = None;
        }
        self
    }

    pub fn with_updates(mut self, n: u64) -> Self {
        if let Training::Offline { updates, .. } = &mut self.training {
            *updates = Some(n);
        }
        self
    }

    pub fn updates(&self) -> Option<u64> {
        match &self.training {
            Training::Offline {
                trajectory_len,
                batch_size,
                updates,
                ..
            } => Some(updates.unwrap_or((*trajectory_len / (*batch_size).max(1)) as u64)),
            Training::Online { .. } => None,
        }
    }

    pub fn arm_seeds<'a>(&'a self, arm: &'a ArmSpec) -> &'a [u64] {
        arm.seeds.as_deref().unwrap_or(&self.seeds)
    }

    pub fn validate(&self) -> Result<()> {
        let env = self.env.build()?;
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(format!(
                "γ = {} must lie in [0, 1)",
                self.gamma
            )));
        }
        if self.arms.is_empty() {
            return Err(Error::config("no estimator arms"));
        }
        if self.seeds.is_empty() && self.arms.iter().any(|a| a.seeds.is_none()) {
            return Err(Error::config("no seeds"));
        }
        let mut labels: Vec<String> = self.arms.iter().map(ArmSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("arm labels must be unique"));
        }
        let outputs = match &self.approximator {
            Architecture::Tabular { states, actions } => {
                match self.env.tabular() {
                    Some(t) if t.n == *states => {}
                    _ => {
                        return Err(Error::config(
                            "a tabular approximator needs a tabular ring of the same size",
                        ))
                    }
                }
                *actions
            }
            Architecture::Mlp(arch) => {
                if arch.input.width() != env.state_dim()
                    && !matches!(arch.input, crate::approx::Featurization::OneHotRing { .. })
                {
                    return Err(Error::config(
                        "network input does not match the state dimension",
                    ));
                }
                arch.outputs()
            }
        };
        if outputs != env.num_actions() {
            return Err(Error::Dimension {
                expected: env.num_actions(),
                actual: outputs,
            });
        }
        if self.mode == Mode::Eval {
            let p = self
                .policy
                .as_ref()
                .ok_or_else(|| Error::config("eval mode needs a `policy`"))?;
            if p.num_actions() != env.num_actions() {
                return Err(Error::config(
                    "policy action count does not match the environment",
                ));
            }
        }
        match &self.training {
            Training::Offline {
                trajectory_len,
                batch_size,
                ..
            } => {
                if *trajectory_len < 2 || *batch_size == 0 {
                    return Err(Error::config(
                        "offline training needs a trajectory of ≥ 2 records and a batch ≥ 1",
                    ));
                }
            }
            Training::Online {
                batch_size,
                replay_capacity,
                ..
            } => {
                if *batch_size == 0 || *replay_capacity < *batch_size {
                    return Err(Error::config(
                        "replay capacity must hold at least one batch",
                    ));
                }
                if env.max_episode_steps().is_none() {
                    return Err(Error::config(
                        "online training needs an episodic environment",
                    ));
                }
            }
        }
        match (&self.metric, &self.oracle) {
            (MetricSpec::RelErrGrid { .. }, OracleSpec::None) => {
                return Err(Error::config("the relative-error metric needs an oracle"));
            }
            (MetricSpec::RelErrGrid { .. }, _) if matches!(self.env, EnvSpec::CartPole) => {
                return Err(Error::config(
                    "the relative-error metric is defined only on the rings",
                ));
            }
            (MetricSpec::EpisodeReward, _) if !matches!(self.training, Training::Online { .. }) => {
                return Err(Error::config("episode reward needs online training"));
            }
            (MetricSpec::RelErrGrid { points: 0 }, _) => {
                return Err(Error::config("empty evaluation grid"))
            }
            _ => {}
        }
        if let OracleSpec::ExactModel { samples, .. } = &self.oracle {
            if self.env.tabular().is_none() || *samples == 0 {
                return Err(Error::config(
                    "an exact-model oracle needs a tabular ring and ≥ 1 sample",
                ));
            }
        }
        Ok(())
    }
}
