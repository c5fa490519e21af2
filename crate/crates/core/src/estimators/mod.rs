//! Stochastic gradient estimators for the squared Bellman residual.
//!
//! Every estimator is a [`GradientEstimator`] trait object, built by name from
//! an [`EstimatorSpec`] through the [`EstimatorRegistry`]. All of them return
//! `j(s_m, a_m, s_{m+1})·∇_θ j(s_m, a_m, s'')` for some choice of surrogate
//! next state `s''`, except the primal-dual estimator which replaces the
//! residual factor with a learned dual function.

mod bff;
mod pd;
mod registry;
mod sample;

pub use bff::{Bff, Nbff};
pub use pd::{pd_update, PdStep, PrimalDual};
pub use registry::{BuildContext, EstimatorFactory, EstimatorRegistry, EstimatorSpec};
pub use sample::{SampleCloning, UncorrelatedSampling};

use std::fmt;

use crate::approx::{QApproximator, Target};
use crate::mdp::{Environment, TrajectoryWindow};
use crate::rng::SimRng;
use crate::Result;

/// Everything an estimator reads besides the window itself.
#[derive(Clone, Copy)]
pub struct EstimatorContext<'a> {
    pub q: &'a QApproximator,
    pub target: Target<'a>,
    pub gamma: f64,
    pub env: &'a dyn Environment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub grad: Vec<f64>,
    /// The residual factor `j(s_m, a_m, s_{m+1})`.
    pub residual: f64,
    pub estimator: &'static str,
    /// A boundary forced the estimator back onto the sample-cloning surrogate.
    pub fallback: bool,
}

/// Fixed-order mean over a minibatch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient {
    pub grad: Vec<f64>,
    pub mean_sq_residual: f64,
    pub fallbacks: usize,
    pub size: usize,
}

impl BatchGradient {
    pub fn mean_of(estimates: &[GradientEstimate]) -> Self {
        assert!(!estimates.is_empty(), "empty batch");
        let mut acc = BatchAccumulator::new(estimates[0].grad.len());
        for e in estimates {
            acc.add(e);
        }
        acc.finish()
    }
}

/// Running sum behind [`BatchGradient::mean_of`], for batches that should
/// not be held in memory at once.
#[derive(Clone, Debug)]
pub struct BatchAccumulator {
    grad: Vec<f64>,
    sq: f64,
    fallbacks: usize,
    size: usize,
}

impl BatchAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            grad: vec![0.0; dim],
            sq: 0.0,
            fallbacks: 0,
            size: 0,
        }
    }

    pub fn add(&mut self, e: &GradientEstimate) {
        for (acc, g) in self.grad.iter_mut().zip(&e.grad) {
            *acc += g;
        }
        self.sq += e.residual * e.residual;
        self.fallbacks += e.fallback as usize;
        self.size += 1;
    }

    pub fn finish(mut self) -> BatchGradient {
        assert!(self.size > 0, "empty batch");
        let n = self.size as f64;
        self.grad.iter_mut().for_each(|g| *g /= n);
        BatchGradient {
            grad: self.grad,
            mean_sq_residual: self.sq / n,
            fallbacks: self.fallbacks,
            size: self.size,
        }
    }
}

pub trait GradientEstimator: Send + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Number of future state differences the estimator wants in a window.
    fn lookahead(&self) -> usize {
        0
    }

    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        window: &TrajectoryWindow,
        rng: &mut SimRng,
    ) -> Result<GradientEstimate>;

    /// Gradient for one parameter update. `update` is the 1-based index of the
    /// update being computed. Stateful estimators override this.
    fn batch_gradient(
        &mut self,
        ctx: &EstimatorContext<'_>,
        windows: &[TrajectoryWindow],
        rng: &mut SimRng,
        _update: u64,
    ) -> Result<BatchGradient> {
        let mut acc = BatchAccumulator::new(ctx.q.num_params());
        for w in windows {
            acc.add(&self.estimate(ctx, w, rng)?);
        }
        Ok(acc.finish())
    }
}

/// Scales `grad` in place by the residual and packages the estimate.
pub(crate) fn finish(
    mut grad: Vec<f64>,
    residual: f64,
    estimator: &'static str,
    fallback: bool,
) -> GradientEstimate {
    grad.iter_mut().for_each(|g| *g *= residual);
    GradientEstimate {
        grad,
        residual,
        estimator,
        fallback,
    }
}

/// `j(s_m, a_m, s_{m+1})` for a window.
pub(crate) fn window_residual(ctx: &EstimatorContext<'_>, window: &TrajectoryWindow) -> f64 {
    crate::approx::residual(
        ctx.q,
        ctx.target,
        window.current(),
        window.action,
        window.next(),
        window.reward(),
        ctx.gamma,
        window.terminal,
    )
    .value
}
