use super::{
    window_residual, BatchGradient, EstimatorContext, GradientEstimate, GradientEstimator,
};
use crate::approx::{grad_residual, QApproximator};
use crate::mdp::TrajectoryWindow;
use crate::optim::Schedule;
use crate::rng::SimRng;
use crate::Result;

/// Primal-dual estimator for `min_θ max_ω E[δ·y − y²/2]`.
///
/// The dual `y(s, a; ω)` shares the primal's architecture. Each update first
/// moves the dual by `ω ← ω + β_k·j·∇_ω y − y·∇_ω y` (the step size scales
/// only the residual term), then returns the primal gradient
/// `y(s, a; ω_{k+1})·∇_θ j`, so only one next-state sample is ever needed.
#[derive(Clone, Debug)]
pub struct PrimalDual {
    dual: QApproximator,
    beta: Schedule,
}

/// Result of one single-transition primal-dual step.
#[derive(Clone, Debug, PartialEq)]
pub struct PdStep {
    /// Dual increment `(β·j − y)·∇_ω y` at `ω_k`.
    pub dual_grad: Vec<f64>,
    /// `y(s, a; ω_{k+1})·∇_θ j` after the dual step.
    pub theta_grad: Vec<f64>,
    pub residual: f64,
}

impl PrimalDual {
    pub fn new(dual: QApproximator, beta: Schedule) -> Self {
        Self { dual, beta }
    }

    pub fn dual(&self) -> &QApproximator {
        &self.dual
    }
}

fn dual_increment(
    ctx: &EstimatorContext<'_>,
    dual: &QApproximator,
    window: &TrajectoryWindow,
    beta: f64,
) -> (Vec<f64>, f64) {
    let j = window_residual(ctx, window);
    let y = dual.evaluate(window.current())[window.action];
    let mut cot = vec![0.0; dual.num_actions()];
    cot[window.action] = beta * j - y;
    let mut grad = vec![0.0; dual.num_params()];
    dual.vjp(window.current(), &cot, &mut grad);
    (grad, j)
}

fn primal(ctx: &EstimatorContext<'_>, dual: &QApproximator, window: &TrajectoryWindow) -> Vec<f64> {
    let y = dual.evaluate(window.current())[window.action];
    let mut grad = grad_residual(
        ctx.q,
        ctx.target,
        window.current(),
        window.action,
        window.next(),
        ctx.gamma,
        window.terminal,
    );
    grad.iter_mut().for_each(|g| *g *= y);
    grad
}

/// One primal-dual step on a single transition: `ω ← ω + (β·j − y)∇_ω y`,
/// then the primal gradient at the updated dual.
pub fn pd_update(
    ctx: &EstimatorContext<'_>,
    window: &TrajectoryWindow,
    dual: &mut QApproximator,
    beta: f64,
) -> PdStep {
    let (dual_grad, residual) = dual_increment(ctx, dual, window, beta);
    for (w, g) in dual.params_mut().iter_mut().zip(&dual_grad) {
        *w += g;
    }
    let theta_grad = primal(ctx, dual, window);
    PdStep {
        dual_grad,
        theta_grad,
        residual,
    }
}

impl GradientEstimator for PrimalDual {
    fn name(&self) -> &'static str {
        "pd"
    }

    /// Primal gradient at the current dual, without a dual step.
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        window: &TrajectoryWindow,
        _rng: &mut SimRng,
    ) -> Result<GradientEstimate> {
        Ok(GradientEstimate {
            grad: primal(ctx, &self.dual, window),
            residual: window_residual(ctx, window),
            estimator: self.name(),
            fallback: false,
        })
    }

    fn batch_gradient(
        &mut self,
        ctx: &EstimatorContext<'_>,
        windows: &[TrajectoryWindow],
        _rng: &mut SimRng,
        update: u64,
    ) -> Result<BatchGradient> {
        let n = windows.len() as f64;
        let beta = self.beta.value(update);
        let mut step = vec![0.0; self.dual.num_params()];
        let mut sq = 0.0;
        for w in windows {
            let (g, j) = dual_increment(ctx, &self.dual, w, beta);
            for (acc, x) in step.iter_mut().zip(&g) {
                *acc += x;
            }
            sq += j * j;
        }
        for (w, g) in self.dual.params_mut().iter_mut().zip(&step) {
            *w += g / n;
        }
        let mut grad = vec![0.0; ctx.q.num_params()];
        for w in windows {
            for (acc, x) in grad.iter_mut().zip(primal(ctx, &self.dual, w)) {
                *acc += x;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        Ok(BatchGradient {
            grad,
            mean_sq_residual: sq / n,
            fallbacks: 0,
            size: windows.len(),
        })
    }
}
