//! Desk-scale experiment presets.

use super::config::{
    ArmSpec, EnvSpec, ExperimentConfig, MetricSpec, Mode, OracleSpec, PaperScale, Training,
};
use crate::approx::{Architecture, MlpArchitecture};
use crate::estimators::EstimatorSpec;
use crate::mdp::{ExplorationSchedule, Policy, TAU};
use crate::optim::{OptimizerSpec, Schedule};
use crate::{Error, Result};

pub const NAMES: [&str; 5] = [
    "tabular-eval",
    "tabular-ctrl",
    "ring-eval",
    "ring-ctrl",
    "cartpole",
];

/// Discount used on both rings.
pub const RING_GAMMA: f64 = 0.8;

pub fn by_name(name: &str) -> Result<ExperimentConfig> {
    match name {
        "tabular-eval" => Ok(tabular_eval()),
        "tabular-ctrl" => Ok(tabular_ctrl()),
        "ring-eval" => Ok(ring_eval()),
        "ring-ctrl" => Ok(ring_ctrl()),
        "cartpole" => Ok(cartpole()),
        _ => Err(Error::Unknown {
            kind: "preset",
            name: name.to_string(),
        }),
    }
}

fn arms(names: &[&str]) -> Vec<ArmSpec> {
    names
        .iter()
        .map(|n| ArmSpec::new(EstimatorSpec::named(n)))
        .collect()
}

fn tabular_ring() -> EnvSpec {
    EnvSpec::TabularRing {
        n: 32,
        epsilon: 1.0,
        sigma: 1.0,
    }
}

/// 32-state ring, fixed sine policy, `T = 10⁶`, `η = 0.5`, batch 50.
pub fn tabular_eval() -> ExperimentConfig {
    let mut arms = arms(&["us", "sc", "bff"]);
    arms.push(ArmSpec::new(EstimatorSpec::nbff(5)));
    ExperimentConfig {
        name: "tabular-eval".into(),
        env: tabular_ring(),
        mode: Mode::Eval,
        policy: Some(Policy::sine_ring()),
        behaviour: None,
        gamma: RING_GAMMA,
        approximator: Architecture::Tabular {
            states: 32,
            actions: 2,
        },
        optimizer: OptimizerSpec::sgd(0.5),
        training: Training::Offline {
            trajectory_len: 1_000_000,
            batch_size: 50,
            updates: None,
            eval_every: 1000,
        },
        arms,
        seeds: (0..5).collect(),
        metric: MetricSpec::RelErrGrid { points: 256 },
        oracle: OracleSpec::ExactModel {
            samples: 50_000,
            seed: 7,
            tol: 1e-10,
        },
        paper_scale: Some(PaperScale {
            trajectory_len: Some(10_000_000),
            ..PaperScale::default()
        }),
    }
}

/// Tabular control from a uniform behaviour policy, `T = 5·10⁶`, batch 100.
pub fn tabular_ctrl() -> ExperimentConfig {
    let mut cfg = tabular_eval();
    cfg.name = "tabular-ctrl".into();
    cfg.mode = Mode::Ctrl;
    cfg.policy = None;
    cfg.behaviour = Some(Policy::Uniform { actions: 2 });
    cfg.training = Training::Offline {
        trajectory_len: 5_000_000,
        batch_size: 100,
        updates: None,
        eval_every: 1000,
    };
    cfg.paper_scale = Some(PaperScale {
        trajectory_len: Some(50_000_000),
        ..PaperScale::default()
    });
    cfg
}

/// Continuous ring with the 1-50-50-2 cosine network, `T = 10⁶`, `η = 0.1`.
pub fn ring_eval() -> ExperimentConfig {
    let mut arms = arms(&["us", "sc", "bff"]);
    let mut pd = ArmSpec::new(EstimatorSpec::pd(Schedule::constant(0.1)));
    pd.seeds = Some((0..10).collect());
    arms.push(pd);
    ExperimentConfig {
        name: "ring-eval".into(),
        env: EnvSpec::ContinuousRing {
            epsilon: TAU / 32.0,
            sigma: 0.2,
        },
        mode: Mode::Eval,
        policy: Some(Policy::sine_ring()),
        behaviour: None,
        gamma: RING_GAMMA,
        approximator: Architecture::Mlp(MlpArchitecture::ring(2)),
        optimizer: OptimizerSpec::sgd(0.1),
        training: Training::Offline {
            trajectory_len: 1_000_000,
            batch_size: 50,
            updates: None,
            eval_every: 500,
        },
        arms,
        seeds: (0..3).collect(),
        metric: MetricSpec::RelErrGrid { points: 256 },
        oracle: OracleSpec::Reference {
            trajectory_len: 1_000_000,
            batch_size: 200,
            lr: Schedule::StepDecay {
                initial: 0.1,
                factor: 0.5,
                every: 10_000,
            },
            updates: 50_000,
            seed: 1_000_003,
        },
        paper_scale: Some(PaperScale {
            oracle_trajectory_len: Some(10_000_000),
            ..PaperScale::default()
        }),
    }
}

/// Continuous-ring control from a uniform behaviour policy.
pub fn ring_ctrl() -> ExperimentConfig {
    let mut cfg = ring_eval();
    cfg.name = "ring-ctrl".into();
    cfg.mode = Mode::Ctrl;
    cfg.policy = None;
    cfg.behaviour = Some(Policy::Uniform { actions: 2 });
    cfg
}

/// CartPole with ε-greedy acting, replay 10 000, batch 50, 200 episodes.
/// BFF and SC use Adam; PD uses `η_k = 0.1·k^(−1/2)`, `β_k = 0.1·k^(−3/4)`.
pub fn cartpole() -> ExperimentConfig {
    let mut arms = arms(&["sc", "bff"]);
    let mut pd = ArmSpec::new(EstimatorSpec::pd(Schedule::PowerLaw {
        scale: 0.1,
        exponent: 0.75,
    }));
    pd.optimizer = Some(OptimizerSpec::Sgd {
        lr: Schedule::PowerLaw {
            scale: 0.1,
            exponent: 0.5,
        },
    });
    arms.push(pd);
    ExperimentConfig {
        name: "cartpole".into(),
        env: EnvSpec::CartPole,
        mode: Mode::Ctrl,
        policy: None,
        behaviour: None,
        gamma: 0.99,
        approximator: Architecture::Mlp(MlpArchitecture::cartpole()),
        optimizer: OptimizerSpec::adam(1e-3),
        training: Training::Online {
            episodes: 200,
            batch_size: 50,
            replay_capacity: 10_000,
            exploration: ExplorationSchedule::default(),
        },
        arms,
        seeds: (0..5).collect(),
        metric: MetricSpec::EpisodeReward,
        oracle: OracleSpec::None,
        paper_scale: None,
    }
}
