//! Rollout storage and the windows the estimators consume.

use std::io::{Read, Write};

use super::{Environment, Policy};
use crate::rng::SimRng;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"BRMTRAJ1";

/// A rollout stored column-wise. Record `m` is `(s_m, a_m, r_m, s_{m+1})`
/// together with its episode id and whether `s_{m+1}` is absorbing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<f64>,
    next_states: Vec<f64>,
    actions: Vec<u32>,
    rewards: Vec<f64>,
    episodes: Vec<u32>,
    terminal: Vec<bool>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    pub fn with_capacity(dim: usize, records: usize) -> Self {
        Self {
            dim,
            states: Vec::with_capacity(records * dim),
            next_states: Vec::with_capacity(records * dim),
            actions: Vec::with_capacity(records),
            rewards: Vec::with_capacity(records),
            episodes: Vec::with_capacity(records),
            terminal: Vec::with_capacity(records),
        }
    }

    pub fn push(
        &mut self,
        state: &[f64],
        action: usize,
        reward: f64,
        next: &[f64],
        episode: u32,
        terminal: bool,
    ) {
        debug_assert_eq!(state.len(), self.dim);
        debug_assert_eq!(next.len(), self.dim);
        self.states.extend_from_slice(state);
        self.next_states.extend_from_slice(next);
        self.actions.push(action as u32);
        self.rewards.push(reward);
        self.episodes.push(episode);
        self.terminal.push(terminal);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn state(&self, m: usize) -> &[f64] {
        &self.states[m * self.dim..(m + 1) * self.dim]
    }

    pub fn next_state(&self, m: usize) -> &[f64] {
        &self.next_states[m * self.dim..(m + 1) * self.dim]
    }

    pub fn action(&self, m: usize) -> usize {
        self.actions[m] as usize
    }

    pub fn reward(&self, m: usize) -> f64 {
        self.rewards[m]
    }

    pub fn episode(&self, m: usize) -> u32 {
        self.episodes[m]
    }

    pub fn is_terminal(&self, m: usize) -> bool {
        self.terminal[m]
    }

    pub fn num_episodes(&self) -> usize {
        let mut count = 0;
        let mut last = None;
        for &e in &self.episodes {
            if last != Some(e) {
                count += 1;
                last = Some(e);
            }
        }
        count
    }

    /// The window `(s_m, a_m, s_{m+1}, …, s_{m+n+1})`, which needs records
    /// `m..=m+n` inside one episode.
    pub fn window(&self, m: usize, n: usize) -> Result<TrajectoryWindow> {
        let reject = |reason| Error::Window {
            start: m,
            lookahead: n,
            reason,
        };
        if m + n >= self.len() {
            return Err(reject("runs past the end of the trajectory"));
        }
        let episode = self.episodes[m];
        if self.episodes[m + n] != episode {
            return Err(reject("crosses an episode boundary"));
        }
        Ok(self.slice_window(m, n, n))
    }

    /// Like [`window`](Self::window) but keeps whatever part of the lookahead
    /// fits in the episode. Fails only when `m` itself is out of range.
    pub fn window_truncated(&self, m: usize, n: usize) -> Result<TrajectoryWindow> {
        if m >= self.len() {
            return Err(Error::Window {
                start: m,
                lookahead: n,
                reason: "starts past the end of the trajectory",
            });
        }
        let episode = self.episodes[m];
        let mut available = 0;
        while available < n
            && m + available + 1 < self.len()
            && self.episodes[m + available + 1] == episode
        {
            available += 1;
        }
        Ok(self.slice_window(m, available, n))
    }

    fn slice_window(&self, m: usize, available: usize, lookahead: usize) -> TrajectoryWindow {
        let dim = self.dim;
        let mut states = Vec::with_capacity((available + 2) * dim);
        states.extend_from_slice(self.state(m));
        for k in 0..=available {
            states.extend_from_slice(self.next_state(m + k));
        }
        TrajectoryWindow {
            dim,
            states,
            action: self.action(m),
            rewards: self.rewards[m..=m + available].to_vec(),
            terminal: self.terminal[m],
            lookahead,
        }
    }

    /// Start positions `m` for which [`window`](Self::window)`(m, n)` succeeds.
    pub fn valid_starts(&self, n: usize) -> Vec<usize> {
        (0..self.len().saturating_sub(n))
            .filter(|&m| self.episodes[m + n] == self.episodes[m])
            .collect()
    }

    /// Whether all records belong to a single episode.
    pub fn is_single_episode(&self) -> bool {
        self.episodes.first() == self.episodes.last()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for m in 0..self.len() {
            for x in self.state(m) {
                out.write_all(&x.to_le_bytes())?;
            }
            out.write_all(&self.actions[m].to_le_bytes())?;
            out.write_all(&self.rewards[m].to_le_bytes())?;
            out.write_all(&self.episodes[m].to_le_bytes())?;
            for x in self.next_state(m) {
                out.write_all(&x.to_le_bytes())?;
            }
            out.write_all(&[self.terminal[m] as u8])?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            what: "trajectory",
            reason: reason.to_string(),
        };
        let io = |e: std::io::Error| bad(&e.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u32buf).map_err(io)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        input.read_exact(&mut u64buf).map_err(io)?;
        let len = u64::from_le_bytes(u64buf) as usize;
        let mut traj = Trajectory::with_capacity(dim, len);
        let mut state = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        let mut flag = [0u8; 1];
        for _ in 0..len {
            for x in state.iter_mut() {
                input.read_exact(&mut u64buf).map_err(io)?;
                *x = f64::from_le_bytes(u64buf);
            }
            input.read_exact(&mut u32buf).map_err(io)?;
            let action = u32::from_le_bytes(u32buf) as usize;
            input.read_exact(&mut u64buf).map_err(io)?;
            let reward = f64::from_le_bytes(u64buf);
            input.read_exact(&mut u32buf).map_err(io)?;
            let episode = u32::from_le_bytes(u32buf);
            for x in next.iter_mut() {
                input.read_exact(&mut u64buf).map_err(io)?;
                *x = f64::from_le_bytes(u64buf);
            }
            input.read_exact(&mut flag).map_err(io)?;
            traj.push(&state, action, reward, &next, episode, flag[0] != 0);
        }
        Ok(traj)
    }
}

/// A contiguous slice `(s_m, a_m, s_{m+1}, …, s_{m+k+1})` of one episode.
///
/// `lookahead` is the number of future differences that were asked for; a
/// window cut short by the end of an episode holds fewer.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryWindow {
    dim: usize,
    states: Vec<f64>,
    pub action: usize,
    /// `r_m, …, r_{m+k}`.
    pub rewards: Vec<f64>,
    /// `s_{m+1}` is absorbing.
    pub terminal: bool,
    pub lookahead: usize,
}

impl TrajectoryWindow {
    /// Builds a window from explicit states `[s_m, s_{m+1}, …]`, each of
    /// length `dim`.
    pub fn from_states(
        dim: usize,
        states: &[Vec<f64>],
        action: usize,
        reward: f64,
        terminal: bool,
    ) -> Self {
        assert!(states.len() >= 2, "a window needs s_m and s_{{m+1}}");
        let flat: Vec<f64> = states.iter().flat_map(|s| s.iter().copied()).collect();
        assert_eq!(flat.len(), dim * states.len());
        let mut rewards = vec![0.0; states.len() - 1];
        rewards[0] = reward;
        Self {
            dim,
            states: flat,
            action,
            rewards,
            terminal,
            lookahead: states.len() - 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `s_{m+k}`.
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn current(&self) -> &[f64] {
        self.state(0)
    }

    pub fn next(&self) -> &[f64] {
        self.state(1)
    }

    pub fn reward(&self) -> f64 {
        self.rewards[0]
    }

    /// Number of future differences `Δs_{m+1}, Δs_{m+2}, …` held.
    pub fn available(&self) -> usize {
        self.states.len() / self.dim - 2
    }

    pub fn is_complete(&self) -> bool {
        self.available() >= self.lookahead
    }

    /// `s_m + Δs_{m+i}` with `Δs_{m+i} = s_{m+i+1} − s_{m+i}`, for `1 ≤ i ≤
    /// available()`. Not projected back onto the state space.
    pub fn borrowed(&self, i: usize) -> Option<Vec<f64>> {
        if i == 0 || i > self.available() {
            return None;
        }
        let (base, from, to) = (self.state(0), self.state(i), self.state(i + 1));
        Some((0..self.dim).map(|d| base[d] + (to[d] - from[d])).collect())
    }
}

/// Rolls out `policy` for `steps` records, resetting episodic environments
/// on failure or at their step cap.
pub fn generate_trajectory(
    env: &dyn Environment,
    policy: &Policy,
    steps: usize,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(env.state_dim(), steps);
    let cap = env.max_episode_steps();
    let mut state = env.reset(rng);
    let mut episode = 0u32;
    let mut in_episode = 0usize;
    for _ in 0..steps {
        let action = policy.sample(&state, rng);
        let step = env.step(&state, action, rng)?;
        traj.push(
            &state,
            action,
            step.reward,
            &step.next,
            episode,
            step.terminal,
        );
        in_episode += 1;
        if step.terminal || cap.is_some_and(|c| in_episode >= c) {
            episode += 1;
            in_episode = 0;
            state = env.reset(rng);
        } else {
            state = step.next;
        }
    }
    Ok(traj)
}
