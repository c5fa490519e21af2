use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use brm::approx::{write_checkpoint, QApproximator, TabularQ, Target};
use brm::estimators::EstimatorRegistry;
use brm::harness::{
    self, compare, emit, load_results, presets, ExperimentConfig, Mode, OracleSpec,
};
use brm::mdp::TabularRingEnv;
use brm::oracle::{
    bias_probe_enumerated, bias_probe_monte_carlo, exact_q_ctrl_tabular, exact_q_eval_tabular,
    ExactModel,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brm", about = "Bellman residual minimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Config file (.toml or .json) or a preset name.
    config: String,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of parameter updates.
    #[arg(long)]
    updates: Option<u64>,
    /// Use the full-scale trajectory lengths.
    #[arg(long)]
    paper_scale: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train every arm and write curves, summary and checkpoints.
    Run(RunFlags),
    /// Compute the reference Q and write it as a checkpoint.
    Oracle(RunFlags),
    /// Measure BFF and SC gradient bias against uncorrelated sampling.
    Probe {
        #[command(flatten)]
        flags: RunFlags,
        /// Monte Carlo windows for continuous environments.
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Compare finished runs.
    Compare {
        dirs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
    },
    /// Print a preset config as TOML.
    Preset { name: String },
}

fn load(flags: &RunFlags) -> Result<ExperimentConfig> {
    let path = Path::new(&flags.config);
    let mut cfg = if path.exists() {
        ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?
    } else {
        presets::by_name(&flags.config)?
    };
    if flags.paper_scale {
        cfg = cfg.at_paper_scale();
    }
    if let Some(seed) = flags.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(n) = flags.updates {
        cfg = cfg.with_updates(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(flags: &RunFlags) -> Result<()> {
    let cfg = load(flags)?;
    let result = harness::run_experiment(&cfg, &EstimatorRegistry::with_builtins())?;
    emit(&result, &flags.out)?;
    for arm in &result.summary.arms {
        println!(
            "{:<8} median final {} = {:.6}  (best seed {})",
            arm.label, result.summary.metric, arm.median_final, arm.best_seed
        );
    }
    Ok(())
}

fn oracle(flags: &RunFlags) -> Result<()> {
    let cfg = load(flags)?;
    let q = harness::compute_oracle(&cfg)?.context("config declares no oracle")?;
    create(&flags.out)?;
    let path = flags.out.join("oracle.ckpt");
    write_checkpoint(&path, &q, 0, 0)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn probe(flags: &RunFlags, samples: usize) -> Result<()> {
    let cfg = load(flags)?;
    let policy = cfg.policy.clone();
    let target = match cfg.mode {
        Mode::Eval => Target::Eval(policy.as_ref().context("eval mode needs a policy")?),
        Mode::Ctrl => Target::Ctrl,
    };
    let behaviour = cfg.behaviour_policy()?;
    let report = if let Some(base) = cfg.env.tabular() {
        let model = ExactModel::analytic(&base);
        let star = match target {
            Target::Eval(p) => exact_q_eval_tabular(&model, p, cfg.gamma)?,
            Target::Ctrl => exact_q_ctrl_tabular(&model, cfg.gamma, 1e-12)?.0,
        };
        let star = QApproximator::Tabular(star);
        let init = QApproximator::Tabular(TabularQ::zeros(base.n, 2));
        let mut near = star.clone();
        for (x, y) in near.params_mut().iter_mut().zip(init.params()) {
            *x += 0.05 * (y - *x);
        }
        let envs: Vec<TabularRingEnv> = [1.0, 0.5, 0.25]
            .iter()
            .map(|f| TabularRingEnv::new(base.n, base.epsilon * f, base.sigma))
            .collect();
        let snaps = vec![
            ("initial".to_string(), init),
            ("near".to_string(), near),
            ("fixed-point".to_string(), star),
        ];
        bias_probe_enumerated(&envs, &snaps, target, &behaviour, cfg.gamma)?
    } else {
        if matches!(cfg.oracle, OracleSpec::None) {
            bail!("a Monte Carlo probe needs an oracle for its converged snapshot");
        }
        let env = cfg.env.build()?;
        let star = harness::compute_oracle(&cfg)?.context("no oracle")?;
        let init = cfg
            .approximator
            .init(&mut brm::rng::seeded(0, brm::rng::streams::INIT));
        let eps = match cfg.env {
            harness::EnvSpec::ContinuousRing { epsilon, .. } => epsilon,
            _ => f64::NAN,
        };
        let snaps = vec![
            ("initial".to_string(), init),
            ("reference".to_string(), star),
        ];
        bias_probe_monte_carlo(
            env.as_ref(),
            eps,
            &snaps,
            target,
            &behaviour,
            cfg.gamma,
            samples,
            0,
        )?
    };
    create(&flags.out)?;
    let path = flags.out.join("probe.json");
    std::fs::write(&path, report.to_json()?)?;
    for r in &report.records {
        println!(
            "ε={:<8.5} {:<12} bff {:.3e} ± {:.1e}  sc {:.3e} ± {:.1e}  E|δ| {:.3e}{}",
            r.epsilon,
            r.snapshot,
            r.bff_bias,
            r.bff_se,
            r.sc_bias,
            r.sc_se,
            r.mean_abs_delta,
            if r.bff_inconclusive || r.sc_inconclusive {
                "  (inconclusive)"
            } else {
                ""
            }
        );
    }
    Ok(())
}

fn compare_dirs(dirs: &[PathBuf], resamples: usize) -> Result<()> {
    if dirs.is_empty() {
        bail!("no result directories given");
    }
    let mut curves = Vec::new();
    let mut higher = None;
    for dir in dirs {
        let (summary, c) =
            load_results(dir).with_context(|| format!("reading {}", dir.display()))?;
        if higher.is_some_and(|h| h != summary.higher_is_better) {
            bail!("results use different metrics");
        }
        higher = Some(summary.higher_is_better);
        curves.extend(c);
    }
    let report = compare(&curves, higher.unwrap_or(false), resamples)?;
    println!("{}", report.to_json()?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(flags) => run(&flags),
        Command::Oracle(flags) => oracle(&flags),
        Command::Probe { flags, samples } => probe(&flags, samples),
        Command::Compare { dirs, resamples } => compare_dirs(&dirs, resamples),
        Command::Preset { name } => {
            print!("{}", presets::by_name(&name)?.to_toml()?);
            Ok(())
        }
    }
}
