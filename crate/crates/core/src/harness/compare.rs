use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::run::{median, LearningCurve};
use crate::rng::{seeded, streams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub label: String,
    pub seeds: usize,
    pub median_final: f64,
    /// Median over seeds of the trapezoidal area under the curve.
    pub median_auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseOrdering {
    pub a: String,
    pub b: String,
    /// `median_final(a) − median_final(b)`.
    pub median_difference: f64,
    /// Fraction of seed-bootstrap resamples in which `a` ends strictly better.
    pub a_better: f64,
    /// Fraction in which `b` ends strictly better.
    pub b_better: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub higher_is_better: bool,
    pub methods: Vec<MethodStats>,
    pub pairs: Vec<PairwiseOrdering>,
}

impl ComparisonReport {
    pub fn method(&self, label: &str) -> Option<&MethodStats> {
        self.methods.iter().find(|m| m.label == label)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairwiseOrdering> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn auc(points: &[(u64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0) as f64)
        .sum()
}

type PerSeed = BTreeMap<u64, Vec<(u64, f64)>>;

fn per_seed(curve: &LearningCurve) -> PerSeed {
    let mut out: PerSeed = BTreeMap::new();
    for r in &curve.records {
        out.entry(r.seed).or_default().push((r.update, r.value));
    }
    out
}

/// Summarizes curves that share one metric cadence.
pub fn compare(
    curves: &[LearningCurve],
    higher_is_better: bool,
    resamples: usize,
) -> Result<ComparisonReport> {
    let grouped: Vec<PerSeed> = curves.iter().map(per_seed).collect();
    let mut cadence: Option<Vec<u64>> = None;
    for (curve, seeds) in curves.iter().zip(&grouped) {
        for points in seeds.values() {
            let updates: Vec<u64> = points.iter().map(|p| p.0).collect();
            match &cadence {
                None => cadence = Some(updates),
                Some(c) if *c != updates => {
                    return Err(Error::config(format!(
                        "`{}` does not share the metric cadence",
                        curve.label
                    )));
                }
                _ => {}
            }
        }
    }

    let finals: Vec<Vec<f64>> = grouped
        .iter()
        .map(|s| s.values().filter_map(|p| p.last().map(|x| x.1)).collect())
        .collect();
    let methods = curves
        .iter()
        .zip(&grouped)
        .zip(&finals)
        .map(|((c, s), f)| MethodStats {
            label: c.label.clone(),
            seeds: s.len(),
            median_final: median(f),
            median_auc: median(&s.values().map(|p| auc(p)).collect::<Vec<_>>()),
        })
        .collect::<Vec<_>>();

    let mut rng = seeded(0, streams::PROBE);
    let mut pairs = Vec::new();
    for i in 0..curves.len() {
        for j in 0..curves.len() {
            if i == j || finals[i].is_empty() || finals[j].is_empty() {
                continue;
            }
            let (mut a_wins, mut b_wins) = (0usize, 0usize);
            for _ in 0..resamples {
                let ma = median(&resample(&finals[i], &mut rng));
                let mb = median(&resample(&finals[j], &mut rng));
                let (better, worse) = if higher_is_better {
                    (ma > mb, ma < mb)
                } else {
                    (ma < mb, ma > mb)
                };
                a_wins += better as usize;
                b_wins += worse as usize;
            }
            let n = resamples.max(1) as f64;
            pairs.push(PairwiseOrdering {
                a: curves[i].label.clone(),
                b: curves[j].label.clone(),
                median_difference: methods[i].median_final - methods[j].median_final,
                a_better: a_wins as f64 / n,
                b_better: b_wins as f64 / n,
            });
        }
    }
    Ok(ComparisonReport {
        higher_is_better,
        methods,
        pairs,
    })
}

fn resample(values: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    (0..values.len())
        .map(|_| values[rng.gen_range(0..values.len())])
        .collect()
}
