use std::collections::VecDeque;

use rand::Rng;

use crate::mdp::{Trajectory, TrajectoryWindow};
use crate::rng::SimRng;
use crate::{Error, Result};

/// Draws `batch` windows with lookahead `n`, start positions uniform with
/// replacement over `0..len−n`. Windows cut by an episode boundary are
/// returned truncated; estimators decide how to fall back.
pub fn sample_batch(
    traj: &Trajectory,
    batch: usize,
    n: usize,
    rng: &mut SimRng,
) -> Result<Vec<TrajectoryWindow>> {
    let starts = traj.len().saturating_sub(n);
    if starts == 0 || batch == 0 {
        return Err(Error::EmptySource(format!(
            "trajectory of {} records has no window with lookahead {n}",
            traj.len()
        )));
    }
    (0..batch)
        .map(|_| traj.window_truncated(rng.gen_range(0..starts), n))
        .collect()
}

/// Fixed-capacity FIFO of windows.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<TrajectoryWindow>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, window: TrajectoryWindow) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(window);
    }

    pub fn get(&self, i: usize) -> Option<&TrajectoryWindow> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TrajectoryWindow> {
        self.items.iter()
    }

    /// Uniform with replacement.
    pub fn sample(&self, batch: usize, rng: &mut SimRng) -> Result<Vec<TrajectoryWindow>> {
        if self.items.is_empty() {
            return Err(Error::EmptySource("replay buffer is empty".into()));
        }
        Ok((0..batch)
            .map(|_| self.items[rng.gen_range(0..self.items.len())].clone())
            .collect())
    }
}

struct Pending {
    state: Vec<f64>,
    next: Vec<f64>,
    action: usize,
    reward: f64,
    terminal: bool,
}

/// Turns a live stream of transitions into windows with lookahead `n`.
///
/// A window is released once `n` further transitions of the same episode
/// have been seen, or truncated when the episode ends first.
pub struct WindowAssembler {
    dim: usize,
    lookahead: usize,
    pending: VecDeque<Pending>,
}

impl WindowAssembler {
    pub fn new(dim: usize, lookahead: usize) -> Self {
        Self {
            dim,
            lookahead,
            pending: VecDeque::new(),
        }
    }

    /// Feeds one transition; `episode_end` closes the episode after it.
    pub fn push(
        &mut self,
        state: &[f64],
        action: usize,
        reward: f64,
        next: &[f64],
        terminal: bool,
        episode_end: bool,
    ) -> Vec<TrajectoryWindow> {
        self.pending.push_back(Pending {
            state: state.to_vec(),
            next: next.to_vec(),
            action,
            reward,
            terminal,
        });
        let mut out = Vec::new();
        if self.pending.len() > self.lookahead {
            out.push(self.release());
        }
        if episode_end {
            while !self.pending.is_empty() {
                out.push(self.release());
            }
        }
        out
    }

    fn release(&mut self) -> TrajectoryWindow {
        let head = &self.pending[0];
        let mut states = Vec::with_capacity(self.pending.len() + 1);
        states.push(head.state.clone());
        for p in self.pending.iter().take(self.lookahead + 1) {
            states.push(p.next.clone());
        }
        let mut window = TrajectoryWindow::from_states(
            self.dim,
            &states,
            head.action,
            head.reward,
            head.terminal,
        );
        window.lookahead = self.lookahead;
        self.pending.pop_front();
        window
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, streams};

    fn line(len: usize) -> Trajectory {
        let mut t = Trajectory::new(1);
        for m in 0..len {
            t.push(&[m as f64], 0, 0.0, &[(m + 1) as f64], 0, false);
        }
        t
    }

    #[test]
    fn unique_window() {
        let t = line(2);
        let mut rng = seeded(0, streams::BATCH);
        let b = sample_batch(&t, 1, 1, &mut rng).unwrap();
        assert_eq!(b[0].state(0), &[0.0]);
        assert_eq!(b[0].state(2), &[2.0]);
    }

    #[test]
    fn empty_source() {
        let t = line(1);
        let mut rng = seeded(0, streams::BATCH);
        assert!(sample_batch(&t, 5, 1, &mut rng).is_err());
        assert!(ReplayBuffer::new(3).sample(1, &mut rng).is_err());
    }

    #[test]
    fn fifo_eviction() {
        let mut buf = ReplayBuffer::new(3);
        for m in 0..4 {
            buf.push(TrajectoryWindow::from_states(
                1,
                &[vec![m as f64], vec![0.0]],
                0,
                0.0,
                false,
            ));
        }
        assert_eq!(buf.len(), 3);
        assert!(buf.iter().all(|w| w.current() != [0.0]));
        assert_eq!(buf.get(0).unwrap().current(), &[1.0]);
    }

    #[test]
    fn assembler_releases_and_flushes() {
        let mut asm = WindowAssembler::new(1, 1);
        assert!(asm.push(&[0.0], 0, 1.0, &[1.0], false, false).is_empty());
        let w = asm.push(&[1.0], 1, 1.0, &[2.0], false, false);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].borrowed(1), Some(vec![1.0]));
        let w = asm.push(&[2.0], 0, 0.0, &[3.0], true, true);
        assert_eq!(w.len(), 2);
        assert!(w[0].is_complete());
        assert!(!w[1].is_complete());
        assert!(w[1].terminal);
    }
}
