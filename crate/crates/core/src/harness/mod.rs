//! Experiment configuration, runs, outputs and comparisons.

mod compare;
mod config;
mod emit;
mod metrics;
pub mod presets;
mod run;

pub use compare::{compare, ComparisonReport, MethodStats, PairwiseOrdering};
pub use config::{
    ArmSpec, EnvSpec, ExperimentConfig, MetricSpec, Mode, OracleSpec, PaperScale, Training,
};
pub use emit::{emit, load_results, read_curve_csv, write_curve_csv};
pub use metrics::{empirical_bellman_residual, RelErrGrid};
pub use run::{
    compute_oracle, median, run_experiment, ArmSummary, CurveRecord, ExperimentResult,
    ExperimentSummary, LearningCurve, RunTiming, SeedSummary,
};
