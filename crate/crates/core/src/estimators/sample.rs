use super::{finish, window_residual, EstimatorContext, GradientEstimate, GradientEstimator};
use crate::approx::grad_residual;
use crate::mdp::TrajectoryWindow;
use crate::rng::SimRng;
use crate::{Error, Result};

/// Uncorrelated sampling: the gradient factor uses a fresh next state drawn
/// from the simulator at `(s_m, a_m)`. Unbiased, but needs the simulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct UncorrelatedSampling;

impl GradientEstimator for UncorrelatedSampling {
    fn name(&self) -> &'static str {
        "us"
    }

    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        window: &TrajectoryWindow,
        rng: &mut SimRng,
    ) -> Result<GradientEstimate> {
        if !ctx.env.supports_resampling() {
            return Err(Error::Unsupported {
                estimator: "us".into(),
                reason: format!("{} cannot resample next states", ctx.env.name()),
            });
        }
        let j = window_residual(ctx, window);
        let redraw = ctx
            .env
            .resample_next(window.current(), window.action, rng)?;
        let terminal = ctx.env.is_absorbing(&redraw);
        let grad = grad_residual(
            ctx.q,
            ctx.target,
            window.current(),
            window.action,
            &redraw,
            ctx.gamma,
            terminal,
        );
        Ok(finish(grad, j, self.name(), false))
    }
}

/// Sample cloning: both factors use the observed `s_{m+1}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleCloning;

impl GradientEstimator for SampleCloning {
    fn name(&self) -> &'static str {
        "sc"
    }

    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        window: &TrajectoryWindow,
        _rng: &mut SimRng,
    ) -> Result<GradientEstimate> {
        Ok(sample_cloning(ctx, window, self.name(), false))
    }
}

pub(crate) fn sample_cloning(
    ctx: &EstimatorContext<'_>,
    window: &TrajectoryWindow,
    name: &'static str,
    fallback: bool,
) -> GradientEstimate {
    let j = window_residual(ctx, window);
    let grad = grad_residual(
        ctx.q,
        ctx.target,
        window.current(),
        window.action,
        window.next(),
        ctx.gamma,
        window.terminal,
    );
    finish(grad, j, name, fallback)
}
