use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MetricSpec, Mode, OracleSpec, Training};
use super::metrics::{empirical_bellman_residual, RelErrGrid};
use crate::approx::{read_checkpoint, QApproximator, Target};
use crate::estimators::{BuildContext, EstimatorRegistry};
use crate::mdp::{generate_trajectory, Environment, Policy, TrajectoryWindow};
use crate::optim::{train_offline, train_online, OnlineSettings, OptimizerSpec, TrainSettings};
use crate::oracle::{
    exact_q_ctrl_tabular, exact_q_eval_tabular, reference_q_continuous, ExactModel,
    ReferenceSettings,
};
use crate::rng::{seeded, streams};
use crate::{Error, Result};

/// One metric observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub update: u64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

/// All seeds of one arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub label: String,
    pub records: Vec<CurveRecord>,
}

impl LearningCurve {
    pub fn seeds(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self.records.iter().map(|r| r.seed).collect();
        set.into_iter().collect()
    }

    pub fn for_seed(&self, seed: u64) -> impl Iterator<Item = &CurveRecord> {
        self.records.iter().filter(move |r| r.seed == seed)
    }

    pub fn final_value(&self, seed: u64) -> Option<f64> {
        self.for_seed(seed).last().map(|r| r.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_value: f64,
    pub updates: u64,
    pub fallback_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub label: String,
    pub estimator: String,
    pub runs: Vec<SeedSummary>,
    pub median_final: f64,
    /// Index into `runs` of the best final value.
    pub best_index: usize,
    pub best_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub metric: String,
    pub higher_is_better: bool,
    pub arms: Vec<ArmSummary>,
}

impl ExperimentSummary {
    pub fn arm(&self, label: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.label == label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub label: String,
    pub seed: u64,
    pub seconds: f64,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub curves: Vec<LearningCurve>,
    pub summary: ExperimentSummary,
    pub oracle: Option<QApproximator>,
    /// Final approximator per `(label, seed)`.
    pub finals: Vec<(String, u64, QApproximator)>,
    pub timing: Vec<RunTiming>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn target<'a>(cfg: &ExperimentConfig, policy: Option<&'a Policy>) -> Result<Target<'a>> {
    match cfg.mode {
        Mode::Ctrl => Ok(Target::Ctrl),
        Mode::Eval => policy
            .map(Target::Eval)
            .ok_or_else(|| Error::config("eval mode needs a `policy`")),
    }
}

/// Computes (or loads) the reference `Q` the metric compares against.
pub fn compute_oracle(cfg: &ExperimentConfig) -> Result<Option<QApproximator>> {
    let policy = cfg.policy.clone();
    let target = target(cfg, policy.as_ref())?;
    match &cfg.oracle {
        OracleSpec::None => Ok(None),
        OracleSpec::ExactModel { samples, seed, tol } => {
            let env = cfg
                .env
                .tabular()
                .ok_or_else(|| Error::config("an exact-model oracle needs a tabular ring"))?;
            let model = ExactModel::estimate(&env, *samples, *seed)?;
            let q = match target {
                Target::Eval(p) => exact_q_eval_tabular(&model, p, cfg.gamma)?,
                Target::Ctrl => exact_q_ctrl_tabular(&model, cfg.gamma, *tol)?.0,
            };
            Ok(Some(QApproximator::Tabular(q)))
        }
        OracleSpec::Reference {
            trajectory_len,
            batch_size,
            lr,
            updates,
            seed,
        } => {
            let env = cfg.env.build()?;
            let settings = ReferenceSettings {
                trajectory_len: *trajectory_len,
                train: TrainSettings {
                    updates: *updates,
                    batch_size: *batch_size,
                    gamma: cfg.gamma,
                    optimizer: OptimizerSpec::Sgd { lr: lr.clone() },
                    eval_every: 0,
                },
                seed: *seed,
            };
            let behaviour = cfg.behaviour_policy()?;
            reference_q_continuous(
                env.as_ref(),
                &behaviour,
                target,
                &cfg.approximator,
                &settings,
            )
            .map(Some)
        }
        OracleSpec::Checkpoint { path } => {
            let (q, _) = read_checkpoint(path)?;
            if q.architecture() != cfg.approximator && cfg.env.tabular().is_none() {
                return Err(Error::config(
                    "oracle checkpoint architecture differs from the approximator",
                ));
            }
            Ok(Some(q))
        }
    }
}

enum Metric {
    RelErr(RelErrGrid),
    Bellman(Vec<TrajectoryWindow>),
    EpisodeReward,
}

impl Metric {
    fn name(&self) -> &'static str {
        match self {
            Metric::RelErr(_) => "relative_error",
            Metric::Bellman(_) => "bellman_residual",
            Metric::EpisodeReward => "episode_reward",
        }
    }

    fn higher_is_better(&self) -> bool {
        matches!(self, Metric::EpisodeReward)
    }
}

fn build_metric(
    cfg: &ExperimentConfig,
    env: &dyn Environment,
    oracle: Option<&QApproximator>,
    behaviour: &Policy,
) -> Result<Metric> {
    match &cfg.metric {
        MetricSpec::RelErrGrid { points } => {
            let oracle =
                oracle.ok_or_else(|| Error::config("the relative-error metric needs an oracle"))?;
            let grid = match cfg.env.tabular() {
                Some(t) => RelErrGrid::new(t.grid().into_iter().map(|s| vec![s]).collect(), oracle),
                None => RelErrGrid::ring(*points, oracle),
            };
            Ok(Metric::RelErr(grid))
        }
        MetricSpec::EmpiricalBellmanResidual { windows } => {
            let mut rng = seeded(u64::MAX, streams::PROBE);
            let traj = generate_trajectory(env, behaviour, windows + 1, &mut rng)?;
            let held_out = traj
                .valid_starts(0)
                .into_iter()
                .take(*windows)
                .map(|m| traj.window(m, 0))
                .collect::<Result<Vec<_>>>()?;
            Ok(Metric::Bellman(held_out))
        }
        MetricSpec::EpisodeReward => Ok(Metric::EpisodeReward),
    }
}

/// Runs every arm for every seed. Offline arms sharing a seed train on the
/// same trajectory.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    registry: &EstimatorRegistry,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    let policy = cfg.policy.clone();
    let target = target(cfg, policy.as_ref())?;
    let behaviour = cfg.behaviour_policy()?;
    for arm in &cfg.arms {
        let ctx = BuildContext {
            architecture: &cfg.approximator,
            seed: 0,
        };
        registry.build(&arm.estimator, &ctx)?;
    }
    let oracle = compute_oracle(cfg)?;
    let metric = build_metric(cfg, env.as_ref(), oracle.as_ref(), &behaviour)?;
    let measure = |q: &QApproximator| -> f64 {
        match &metric {
            Metric::RelErr(grid) => grid.relative_error(q),
            Metric::Bellman(windows) => empirical_bellman_residual(q, target, cfg.gamma, windows),
            Metric::EpisodeReward => f64::NAN,
        }
    };

    let all_seeds: BTreeSet<u64> = cfg
        .arms
        .iter()
        .flat_map(|a| cfg.arm_seeds(a).iter().copied())
        .collect();
    let mut records: BTreeMap<(usize, u64), (Vec<CurveRecord>, SeedSummary, QApproximator)> =
        BTreeMap::new();
    let mut timing = Vec::new();

    for &seed in &all_seeds {
        let traj = match &cfg.training {
            Training::Offline { trajectory_len, .. } => Some(generate_trajectory(
                env.as_ref(),
                &behaviour,
                *trajectory_len,
                &mut seeded(seed, streams::TRAJECTORY),
            )?),
            Training::Online { .. } => None,
        };
        for (i, arm) in cfg.arms.iter().enumerate() {
            if !cfg.arm_seeds(arm).contains(&seed) {
                continue;
            }
            let started = Instant::now();
            let build = BuildContext {
                architecture: &cfg.approximator,
                seed,
            };
            let mut estimator = registry.build(&arm.estimator, &build)?;
            let mut q = cfg.approximator.init(&mut seeded(seed, streams::INIT));
            let optimizer = arm
                .optimizer
                .clone()
                .unwrap_or_else(|| cfg.optimizer.clone());
            let mut curve = Vec::new();
            let stats = match (&cfg.training, &traj) {
                (
                    Training::Offline {
                        batch_size,
                        eval_every,
                        ..
                    },
                    Some(traj),
                ) => {
                    let settings = TrainSettings {
                        updates: cfg.updates().unwrap_or(0),
                        batch_size: *batch_size,
                        gamma: cfg.gamma,
                        optimizer,
                        eval_every: *eval_every,
                    };
                    let name = metric.name();
                    let mut observe = |k: u64, q: &QApproximator| -> Result<()> {
                        curve.push(CurveRecord {
                            update: k,
                            seed,
                            metric: name.to_string(),
                            value: measure(q),
                        });
                        Ok(())
                    };
                    train_offline(
                        &mut q,
                        estimator.as_mut(),
                        env.as_ref(),
                        target,
                        traj,
                        &settings,
                        seed,
                        &mut observe,
                    )?
                }
                (
                    Training::Online {
                        episodes,
                        batch_size,
                        replay_capacity,
                        exploration,
                    },
                    _,
                ) => {
                    let settings = OnlineSettings {
                        episodes: *episodes,
                        batch_size: *batch_size,
                        gamma: cfg.gamma,
                        optimizer,
                        replay_capacity: *replay_capacity,
                        exploration: *exploration,
                    };
                    let by_reward = matches!(metric, Metric::EpisodeReward);
                    let name = metric.name();
                    let mut observe =
                        |episode: usize, reward: f64, q: &QApproximator| -> Result<()> {
                            curve.push(CurveRecord {
                                update: episode as u64 + 1,
                                seed,
                                metric: name.to_string(),
                                value: if by_reward { reward } else { measure(q) },
                            });
                            Ok(())
                        };
                    train_online(
                        &mut q,
                        estimator.as_mut(),
                        env.as_ref(),
                        target,
                        &settings,
                        seed,
                        &mut observe,
                    )?
                }
                (Training::Offline { .. }, None) => {
                    unreachable!("offline trajectory is generated above")
                }
            };
            let summary = SeedSummary {
                seed,
                final_value: curve.last().map_or(f64::NAN, |r| r.value),
                updates: stats.updates,
                fallback_rate: stats.fallback_rate(),
            };
            timing.push(RunTiming {
                label: arm.label(),
                seed,
                seconds: started.elapsed().as_secs_f64(),
            });
            records.insert((i, seed), (curve, summary, q));
        }
    }

    let higher = metric.higher_is_better();
    let mut curves = Vec::new();
    let mut arms = Vec::new();
    let mut finals = Vec::new();
    for (i, arm) in cfg.arms.iter().enumerate() {
        let mut curve = LearningCurve {
            label: arm.label(),
            records: Vec::new(),
        };
        let mut runs = Vec::new();
        for (&(_, seed), (recs, summary, q)) in records.range((i, 0)..=(i, u64::MAX)) {
            curve.records.extend(recs.iter().cloned());
            runs.push(summary.clone());
            finals.push((arm.label(), seed, q.clone()));
        }
        let values: Vec<f64> = runs.iter().map(|r| r.final_value).collect();
        let best_index = (0..runs.len())
            .reduce(|b, k| {
                let better = if higher {
                    values[k] > values[b]
                } else {
                    values[k] < values[b]
                };
                if better {
                    k
                } else {
                    b
                }
            })
            .unwrap_or(0);
        arms.push(ArmSummary {
            label: arm.label(),
            estimator: arm.estimator.name.clone(),
            median_final: median(&values),
            best_seed: runs.get(best_index).map_or(0, |r| r.seed),
            best_index,
            runs,
        });
        curves.push(curve);
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        curves,
        summary: ExperimentSummary {
            name: cfg.name.clone(),
            metric: metric.name().to_string(),
            higher_is_better: higher,
            arms,
        },
        oracle,
        finals,
        timing,
    })
}
