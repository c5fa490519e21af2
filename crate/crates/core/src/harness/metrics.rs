use crate::approx::{residual, QApproximator, Target};
use crate::mdp::{TrajectoryWindow, TAU};

/// Fixed evaluation grid and the oracle's values on it.
#[derive(Clone, Debug)]
pub struct RelErrGrid {
    states: Vec<Vec<f64>>,
    reference: Vec<f64>,
    norm: f64,
}

impl RelErrGrid {
    pub fn new(states: Vec<Vec<f64>>, oracle: &QApproximator) -> Self {
        let reference: Vec<f64> = states.iter().flat_map(|s| oracle.evaluate(s)).collect();
        let norm = reference.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self {
            states,
            reference,
            norm,
        }
    }

    /// `points` angles `2πi/points`.
    pub fn ring(points: usize, oracle: &QApproximator) -> Self {
        let states = (0..points)
            .map(|i| vec![TAU * i as f64 / points as f64])
            .collect();
        Self::new(states, oracle)
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn relative_error(&self, q: &QApproximator) -> f64 {
        let mut sq = 0.0;
        let mut i = 0;
        for s in &self.states {
            for v in q.evaluate(s) {
                let d = v - self.reference[i];
                sq += d * d;
                i += 1;
            }
        }
        if self.norm == 0.0 {
            sq.sqrt()
        } else {
            sq.sqrt() / self.norm
        }
    }
}

/// `Ê[j²]` over a fixed set of windows.
pub fn empirical_bellman_residual(
    q: &QApproximator,
    target: Target<'_>,
    gamma: f64,
    windows: &[TrajectoryWindow],
) -> f64 {
    if windows.is_empty() {
        return 0.0;
    }
    let total: f64 = windows
        .iter()
        .map(|w| {
            let j = residual(
                q,
                target,
                w.current(),
                w.action,
                w.next(),
                w.reward(),
                gamma,
                w.terminal,
            )
            .value;
            j * j
        })
        .sum();
    total / windows.len() as f64
}
