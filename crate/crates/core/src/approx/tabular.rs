use crate::mdp::TAU;

/// `Q ∈ R^{|S|×|A|}` over an `n`-point ring grid, stored state-major
/// (`values[s·|A| + a]`).
#[derive(Clone, Debug, PartialEq)]
pub struct TabularQ {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl TabularQ {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n_states * n_actions);
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions(&self) -> usize {
        self.n_actions
    }

    pub fn index_of(&self, state: &[f64]) -> usize {
        let n = self.n_states as i64;
        ((state[0] * self.n_states as f64 / TAU).round() as i64).rem_euclid(n) as usize
    }

    pub fn entry(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[self.entry(s, a)]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        let e = self.entry(s, a);
        self.values[e] = value;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
