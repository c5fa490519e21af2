use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Bff, GradientEstimator, Nbff, PrimalDual, SampleCloning, UncorrelatedSampling};
use crate::approx::Architecture;
use crate::optim::Schedule;
use crate::rng::{seeded, streams};
use crate::{Error, Result};

/// Declarative estimator choice as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    /// Registry key: `us`, `sc`, `bff`, `nbff` or `pd`.
    pub name: String,
    /// Display label for outputs; defaults to the name (`nbff` becomes e.g.
    /// `4bff`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Number of future steps for `nbff`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Explicit `nbff` weights; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Dual step-size schedule for `pd`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Schedule>,
}

impl EstimatorSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            label: None,
            steps: None,
            weights: None,
            beta: None,
        }
    }

    pub fn nbff(steps: usize) -> Self {
        Self {
            steps: Some(steps),
            ..Self::named("nbff")
        }
    }

    pub fn pd(beta: Schedule) -> Self {
        Self {
            beta: Some(beta),
            ..Self::named("pd")
        }
    }

    pub fn label(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        match (self.name.as_str(), self.steps, &self.weights) {
            ("nbff", _, Some(w)) => format!("{}bff", w.len()),
            ("nbff", Some(n), None) => format!("{n}bff"),
            _ => self.name.clone(),
        }
    }
}

/// What a factory may need besides the spec.
#[derive(Clone, Debug)]
pub struct BuildContext<'a> {
    pub architecture: &'a Architecture,
    pub seed: u64,
}

pub type EstimatorFactory =
    fn(&EstimatorSpec, &BuildContext<'_>) -> Result<Box<dyn GradientEstimator>>;

/// Name → constructor table for gradient estimators.
#[derive(Clone)]
pub struct EstimatorRegistry {
    factories: BTreeMap<String, EstimatorFactory>,
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register("us", |_, _| Ok(Box::new(UncorrelatedSampling)));
        registry.register("sc", |_, _| Ok(Box::new(SampleCloning)));
        registry.register("bff", |_, _| Ok(Box::new(Bff)));
        registry.register("nbff", |spec, _| {
            let nbff = match (&spec.weights, spec.steps) {
                (Some(w), _) => Nbff::new(w.clone())?,
                (None, Some(n)) if n >= 1 => Nbff::uniform(n)?,
                _ => {
                    return Err(Error::config(
                        "nbff needs `steps` ≥ 1 or explicit `weights`",
                    ))
                }
            };
            Ok(Box::new(nbff))
        });
        registry.register("pd", |spec, ctx| {
            let beta = spec.beta.clone().unwrap_or(Schedule::constant(0.1));
            let dual = ctx
                .architecture
                .init(&mut seeded(ctx.seed, streams::DUAL_INIT));
            Ok(Box::new(PrimalDual::new(dual, beta)))
        });
        registry
    }

    pub fn register(&mut self, name: &str, factory: EstimatorFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        spec: &EstimatorSpec,
        ctx: &BuildContext<'_>,
    ) -> Result<Box<dyn GradientEstimator>> {
        let factory = self
            .factories
            .get(&spec.name)
            .ok_or_else(|| Error::Unknown {
                kind: "estimator",
                name: spec.name.clone(),
            })?;
        factory(spec, ctx)
    }
}
