//! Environments, policies and trajectory generation.

mod cartpole;
mod policy;
mod ring;
mod trajectory;

pub use cartpole::CartPoleEnv;
pub use policy::{greedy_action, EpsilonGreedy, ExplorationSchedule, Policy};
pub use ring::{ring_reward, wrap_angle, ContinuousRingEnv, TabularRingEnv, TAU};
pub use trajectory::{generate_trajectory, Trajectory, TrajectoryWindow};

use std::fmt;

use crate::rng::SimRng;
use crate::Result;

/// Outcome of a single environment transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next: Vec<f64>,
    pub reward: f64,
    /// `next` is an absorbing failure state: nothing is bootstrapped from it.
    pub terminal: bool,
}

/// A simulator with a discrete action set.
///
/// Implementations are immutable after construction; all randomness comes
/// from the caller's rng.
pub trait Environment: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn state_dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    /// Initial state of a fresh episode.
    fn reset(&self, rng: &mut SimRng) -> Vec<f64>;

    fn step(&self, state: &[f64], action: usize, rng: &mut SimRng) -> Result<Step>;

    /// Draws a next state from the one-step kernel at `(state, action)`,
    /// independently of any previous draw.
    ///
    /// This is a simulator privilege that a model-free learner does not have;
    /// only the uncorrelated-sampling baseline and the oracles use it.
    fn resample_next(&self, state: &[f64], action: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
        Ok(self.step(state, action, rng)?.next)
    }

    fn supports_resampling(&self) -> bool {
        true
    }

    /// Whether nothing should be bootstrapped from `state`.
    fn is_absorbing(&self, _state: &[f64]) -> bool {
        false
    }

    /// Maps an arbitrary point (e.g. a borrowed-from-the-future surrogate) back
    /// into the state space.
    fn project(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    /// Step cap for episodic environments, `None` for continuing ones.
    fn max_episode_steps(&self) -> Option<usize> {
        None
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action < self.num_actions() {
            Ok(())
        } else {
            Err(crate::Error::InvalidAction {
                action,
                num_actions: self.num_actions(),
            })
        }
    }
}
