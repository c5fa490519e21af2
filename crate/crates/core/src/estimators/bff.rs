use super::sample::sample_cloning;
use super::{finish, window_residual, EstimatorContext, GradientEstimate, GradientEstimator};
use crate::approx::accumulate_grad_residual;
use crate::mdp::TrajectoryWindow;
use crate::rng::SimRng;
use crate::{Error, Result};

/// Borrowing from the future: the second next-state sample is rebuilt as
/// `s_m + (s_{m+2} − s_{m+1})` and projected back onto the state space.
///
/// When the window ends before `s_{m+2}` (end of an episode) the estimate
/// falls back to sample cloning and is flagged.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bff;

impl GradientEstimator for Bff {
    fn name(&self) -> &'static str {
        "bff"
    }

    fn lookahead(&self) -> usize {
        1
    }

    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        window: &TrajectoryWindow,
        _rng: &mut SimRng,
    ) -> Result<GradientEstimate> {
        let borrowed = match window.borrowed(1) {
            Some(b) if !window.terminal => ctx.env.project(&b),
            _ => return Ok(sample_cloning(ctx, window, self.name(), true)),
        };
        let j = window_residual(ctx, window);
        let mut grad = vec![0.0; ctx.q.num_params()];
        let terminal = ctx.env.is_absorbing(&borrowed);
        accumulate_grad_residual(
            ctx.q,
            ctx.target,
            window.current(),
            window.action,
            &borrowed,
            ctx.gamma,
            terminal,
            1.0,
            &mut grad,
        );
        Ok(finish(grad, j, self.name(), false))
    }
}

/// Multi-step borrowing: the gradient factor averages the surrogates
/// `s_m + Δs_{m+i}`, `i = 1..n`, with weights `α_i` summing to one.
///
/// Surrogates that would need states past the end of the episode are replaced
/// by the observed `s_{m+1}`.
#[derive(Clone, Debug)]
pub struct Nbff {
    weights: Vec<f64>,
}

impl Nbff {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("nbff needs at least one weight"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::config("nbff weights must be finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("nbff weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// `α_i = 1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        let n = n.max(1);
        let mut weights = vec![1.0 / n as f64; n];
        // absorb the rounding so the weights sum to one
        let rest: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - rest;
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl GradientEstimator for Nbff {
    fn name(&self) -> &'static str {
        "nbff"
    }

    fn lookahead(&self) -> usize {
        self.weights.len()
    }

    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        window: &TrajectoryWindow,
        _rng: &mut SimRng,
    ) -> Result<GradientEstimate> {
        let j = window_residual(ctx, window);
        let mut grad = vec![0.0; ctx.q.num_params()];
        let mut fallback = false;
        for (i, &alpha) in self.weights.iter().enumerate() {
            let (surrogate, terminal) = match window.borrowed(i + 1) {
                Some(b) if !window.terminal => {
                    let b = ctx.env.project(&b);
                    let terminal = ctx.env.is_absorbing(&b);
                    (b, terminal)
                }
                _ => {
                    fallback = true;
                    (window.next().to_vec(), window.terminal)
                }
            };
            accumulate_grad_residual(
                ctx.q,
                ctx.target,
                window.current(),
                window.action,
                &surrogate,
                ctx.gamma,
                terminal,
                alpha,
                &mut grad,
            );
        }
        Ok(finish(grad, j, self.name(), fallback))
    }
}
