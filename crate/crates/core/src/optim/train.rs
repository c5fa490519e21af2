use serde::{Deserialize, Serialize};

use super::{sample_batch, OptimizerSpec, ReplayBuffer, WindowAssembler};
use crate::approx::{QApproximator, Target};
use crate::estimators::{EstimatorContext, GradientEstimator};
use crate::mdp::{Environment, EpsilonGreedy, ExplorationSchedule, Trajectory};
use crate::rng::{seeded, streams};
use crate::Result;

/// Settings shared by both training loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub updates: u64,
    pub batch_size: usize,
    pub gamma: f64,
    pub optimizer: OptimizerSpec,
    /// Metric cadence in updates; `0` observes only the start and the end.
    pub eval_every: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineSettings {
    pub episodes: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub optimizer: OptimizerSpec,
    pub replay_capacity: usize,
    pub exploration: ExplorationSchedule,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub updates: u64,
    pub windows: u64,
    pub fallbacks: u64,
    /// Online only.
    pub episode_rewards: Vec<f64>,
}

impl TrainStats {
    pub fn fallback_rate(&self) -> f64 {
        if self.windows == 0 {
            0.0
        } else {
            self.fallbacks as f64 / self.windows as f64
        }
    }
}

/// Minibatch training on a fixed trajectory. `observe` sees the approximator
/// before the first update, every `eval_every` updates, and after the last.
#[allow(clippy::too_many_arguments)]
pub fn train_offline(
    q: &mut QApproximator,
    estimator: &mut dyn GradientEstimator,
    env: &dyn Environment,
    target: Target<'_>,
    traj: &Trajectory,
    settings: &TrainSettings,
    seed: u64,
    observe: &mut dyn FnMut(u64, &QApproximator) -> Result<()>,
) -> Result<TrainStats> {
    let mut batch_rng = seeded(seed, streams::BATCH);
    let mut est_rng = seeded(seed, streams::RESAMPLE);
    let mut opt = settings.optimizer.build(q.num_params());
    let mut stats = TrainStats::default();
    let lookahead = estimator.lookahead();
    observe(0, q)?;
    for k in 1..=settings.updates {
        let windows = sample_batch(traj, settings.batch_size, lookahead, &mut batch_rng)?;
        let batch = {
            let ctx = EstimatorContext {
                q,
                target,
                gamma: settings.gamma,
                env,
            };
            estimator.batch_gradient(&ctx, &windows, &mut est_rng, k)?
        };
        opt.step(q.params_mut(), &batch.grad, k)?;
        stats.updates = k;
        stats.windows += batch.size as u64;
        stats.fallbacks += batch.fallbacks as u64;
        let due = settings.eval_every > 0 && k % settings.eval_every == 0;
        if due || k == settings.updates {
            observe(k, q)?;
        }
    }
    Ok(stats)
}

/// Episodic training: act ε-greedily on the current Q, store windows in a
/// replay buffer, and take one minibatch update per environment step once the
/// buffer holds a full batch. `observe` is called after every episode with
/// its index and total reward.
#[allow(clippy::too_many_arguments)]
pub fn train_online(
    q: &mut QApproximator,
    estimator: &mut dyn GradientEstimator,
    env: &dyn Environment,
    target: Target<'_>,
    settings: &OnlineSettings,
    seed: u64,
    observe: &mut dyn FnMut(usize, f64, &QApproximator) -> Result<()>,
) -> Result<TrainStats> {
    let mut env_rng = seeded(seed, streams::TRAJECTORY);
    let mut act_rng = seeded(seed, streams::ACTING);
    let mut batch_rng = seeded(seed, streams::BATCH);
    let mut est_rng = seeded(seed, streams::RESAMPLE);
    let mut opt = settings.optimizer.build(q.num_params());
    let mut replay = ReplayBuffer::new(settings.replay_capacity);
    let mut assembler = WindowAssembler::new(env.state_dim(), estimator.lookahead());
    let cap = env.max_episode_steps();
    let mut stats = TrainStats::default();

    for episode in 0..settings.episodes {
        let mut state = env.reset(&mut env_rng);
        let mut total = 0.0;
        let mut steps = 0usize;
        loop {
            let eps = settings.exploration.value(stats.updates);
            let action = EpsilonGreedy::select(&q.evaluate(&state), eps, &mut act_rng);
            let step = env.step(&state, action, &mut env_rng)?;
            total += step.reward;
            steps += 1;
            let done = step.terminal || cap.is_some_and(|c| steps >= c);
            for w in assembler.push(&state, action, step.reward, &step.next, step.terminal, done) {
                replay.push(w);
            }
            if replay.len() >= settings.batch_size {
                let k = stats.updates + 1;
                let windows = replay.sample(settings.batch_size, &mut batch_rng)?;
                let batch = {
                    let ctx = EstimatorContext {
                        q,
                        target,
                        gamma: settings.gamma,
                        env,
                    };
                    estimator.batch_gradient(&ctx, &windows, &mut est_rng, k)?
                };
                opt.step(q.params_mut(), &batch.grad, k)?;
                stats.updates = k;
                stats.windows += batch.size as u64;
                stats.fallbacks += batch.fallbacks as u64;
            }
            if done {
                break;
            }
            state = step.next;
        }
        stats.episode_rewards.push(total);
        observe(episode, total, q)?;
    }
    Ok(stats)
}
