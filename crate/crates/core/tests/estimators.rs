use brm::approx::{Architecture, MlpArchitecture, MlpQ, QApproximator, TabularQ, Target};
use brm::estimators::{
    pd_update, Bff, BuildContext, EstimatorContext, EstimatorRegistry, EstimatorSpec,
    GradientEstimator, Nbff, PrimalDual, SampleCloning, UncorrelatedSampling,
};
use brm::mdp::{ContinuousRingEnv, Environment, Policy, TabularRingEnv, TrajectoryWindow, TAU};
use brm::optim::Schedule;
use brm::oracle::{expected_residual, ExactModel};
use brm::rng::{seeded, standard_normal};
use brm::Error;
use rand::Rng;

fn window(states: &[f64], action: usize, reward: f64) -> TrajectoryWindow {
    let s: Vec<Vec<f64>> = states.iter().map(|&x| vec![x]).collect();
    TrajectoryWindow::from_states(1, &s, action, reward, false)
}

fn ring_q(seed: u64) -> QApproximator {
    Architecture::Mlp(MlpArchitecture::ring(2)).init(&mut seeded(seed, 2))
}

fn nonzeros(g: &[f64]) -> usize {
    g.iter().filter(|x| **x != 0.0).count()
}

#[test]
fn nbff_one_step_is_bff_bit_exact() {
    let env = ContinuousRingEnv::standard();
    let pol = Policy::sine_ring();
    let q = ring_q(1);
    let mut rng = seeded(9, 1);
    let nbff = Nbff::uniform(1).unwrap();
    for target in [Target::Eval(&pol), Target::Ctrl] {
        let ctx = EstimatorContext {
            q: &q,
            target,
            gamma: 0.8,
            env: &env,
        };
        for _ in 0..500 {
            let s: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..TAU)).collect();
            let w = window(&s, rng.gen_range(0..2), rng.gen_range(0.0..2.0));
            let a = Bff.estimate(&ctx, &w, &mut rng).unwrap();
            let b = nbff.estimate(&ctx, &w, &mut rng).unwrap();
            assert_eq!(a.grad, b.grad);
            assert_eq!(a.residual, b.residual);
        }
    }
}

#[test]
fn degenerate_kernel_collapses_estimators() {
    let env = ContinuousRingEnv::new(TAU / 32.0, 0.0);
    let pol = Policy::sine_ring();
    let q = ring_q(3);
    let mut rng = seeded(4, 1);
    for a in 0..2 {
        for start in [0.1, 2.0, 6.0] {
            let s1 = env.step(&[start], a, &mut rng).unwrap();
            let s2 = env.step(&s1.next, a, &mut rng).unwrap();
            let w = TrajectoryWindow::from_states(
                1,
                &[vec![start], s1.next.clone(), s2.next.clone()],
                a,
                s1.reward,
                false,
            );
            for target in [Target::Eval(&pol), Target::Ctrl] {
                let ctx = EstimatorContext {
                    q: &q,
                    target,
                    gamma: 0.8,
                    env: &env,
                };
                let us = UncorrelatedSampling.estimate(&ctx, &w, &mut rng).unwrap();
                let sc = SampleCloning.estimate(&ctx, &w, &mut rng).unwrap();
                let bff = Bff.estimate(&ctx, &w, &mut rng).unwrap();
                assert_eq!(us.grad, sc.grad);
                for (x, y) in bff.grad.iter().zip(&sc.grad) {
                    // wrap-around can differ in the last bit
                    assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
                }
            }
        }
    }
}

#[test]
fn bff_surrogate_arithmetic() {
    let w = window(&[1.0, 1.2, 1.5], 0, 0.0);
    let b = w.borrowed(1).unwrap();
    assert!((b[0] - 1.3).abs() < 1e-15);
}

#[test]
fn tabular_matches_one_hot_network() {
    let env = TabularRingEnv::standard();
    let pol = Policy::sine_ring();
    let n = env.n;
    let mut rng = seeded(11, 1);
    let values: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let table = QApproximator::Tabular(TabularQ::from_values(n, 2, values.clone()));
    let mut w = vec![0.0; 2 * n];
    for s in 0..n {
        for a in 0..2 {
            w[a * n + s] = values[s * 2 + a];
        }
    }
    let net = QApproximator::Mlp(MlpQ::from_params(MlpArchitecture::one_hot_linear(n, 2), w));
    let perm = |g: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; 2 * n];
        for s in 0..n {
            for a in 0..2 {
                out[s * 2 + a] = g[a * n + s];
            }
        }
        out
    };
    let estimators: Vec<Box<dyn GradientEstimator>> = vec![
        Box::new(UncorrelatedSampling),
        Box::new(SampleCloning),
        Box::new(Bff),
        Box::new(Nbff::uniform(3).unwrap()),
    ];
    for s in 0..n {
        for a in 0..2 {
            let states: Vec<f64> = (0..5)
                .map(|_| env.grid_point(rng.gen_range(0..n)))
                .collect();
            let mut states = states;
            states[0] = env.grid_point(s);
            let w = window(&states, a, rng.gen_range(0.0..2.0));
            for target in [Target::Eval(&pol), Target::Ctrl] {
                for est in &estimators {
                    let seed = rng.gen();
                    let ctx_t = EstimatorContext {
                        q: &table,
                        target,
                        gamma: 0.8,
                        env: &env,
                    };
                    let ctx_n = EstimatorContext { q: &net, ..ctx_t };
                    let gt = est.estimate(&ctx_t, &w, &mut seeded(seed, 8)).unwrap();
                    let gn = est.estimate(&ctx_n, &w, &mut seeded(seed, 8)).unwrap();
                    assert_eq!(gt.residual, gn.residual);
                    assert_eq!(gt.grad, perm(&gn.grad), "{} at ({s}, {a})", est.name());
                }
            }
        }
    }
}

#[test]
fn zero_table_gradient_patterns() {
    let env = TabularRingEnv::standard();
    let pol = Policy::sine_ring();
    let q = QApproximator::Tabular(TabularQ::zeros(32, 2));
    let r = 1.3;
    let (s, a) = (3, 1);
    let w = window(
        &[env.grid_point(s), env.grid_point(5), env.grid_point(9)],
        a,
        r,
    );
    let mut rng = seeded(0, 1);

    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &env,
    };
    let sc = SampleCloning.estimate(&ctx, &w, &mut rng).unwrap();
    assert_eq!(sc.grad[s * 2 + a], -r);
    let pi = pol.probs(&[env.grid_point(5)]);
    for (b, p) in pi.iter().enumerate() {
        assert!((sc.grad[5 * 2 + b] - 0.8 * p * r).abs() < 1e-15);
    }
    assert_eq!(nonzeros(&sc.grad), 3);

    // BFF surrogate: 3 + (9 − 5) = 7
    let bff = Bff.estimate(&ctx, &w, &mut rng).unwrap();
    let pi7 = pol.probs(&[env.grid_point(7)]);
    for (b, p) in pi7.iter().enumerate() {
        assert!((bff.grad[7 * 2 + b] - 0.8 * p * r).abs() < 1e-15);
    }
    assert!(nonzeros(&bff.grad) <= 3);

    let ctrl = EstimatorContext {
        target: Target::Ctrl,
        ..ctx
    };
    let g = Bff.estimate(&ctrl, &w, &mut rng).unwrap();
    assert_eq!(g.grad[s * 2 + a], -r);
    assert!((g.grad[7 * 2] - 0.8 * r).abs() < 1e-15);
    assert_eq!(nonzeros(&g.grad), 2);

    let us = UncorrelatedSampling.estimate(&ctx, &w, &mut rng).unwrap();
    assert_eq!(us.grad[s * 2 + a], -r);
    assert!(nonzeros(&us.grad) <= 3);
}

#[test]
fn sparsity_on_random_tables() {
    let env = TabularRingEnv::standard();
    let pol = Policy::sine_ring();
    let mut rng = seeded(5, 1);
    for _ in 0..200 {
        let vals: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = QApproximator::Tabular(TabularQ::from_values(32, 2, vals));
        let states: Vec<f64> = (0..3)
            .map(|_| env.grid_point(rng.gen_range(0..32)))
            .collect();
        let w = window(&states, rng.gen_range(0..2), 1.0);
        for (target, max) in [(Target::Eval(&pol), 3), (Target::Ctrl, 2)] {
            let ctx = EstimatorContext {
                q: &q,
                target,
                gamma: 0.8,
                env: &env,
            };
            for est in [
                &Bff as &dyn GradientEstimator,
                &SampleCloning,
                &UncorrelatedSampling,
            ] {
                assert!(nonzeros(&est.estimate(&ctx, &w, &mut rng).unwrap().grad) <= max);
            }
        }
    }
}

#[test]
fn nbff_two_step_hand_computed() {
    let env = TabularRingEnv::standard();
    let q = QApproximator::Tabular(TabularQ::zeros(32, 2));
    let pts: Vec<f64> = [4, 6, 7, 10, 12]
        .iter()
        .map(|&k| env.grid_point(k))
        .collect();
    let w = window(&pts, 0, 2.0);
    let est = Nbff::new(vec![0.5, 0.5]).unwrap();
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Ctrl,
        gamma: 0.5,
        env: &env,
    };
    let g = est.estimate(&ctx, &w, &mut seeded(0, 1)).unwrap();
    // surrogates 4 + (7 − 6) = 5 and 4 + (10 − 7) = 7, greedy action 0
    let mut expected = vec![0.0; 64];
    expected[4 * 2] = -2.0;
    expected[5 * 2] += 0.5 * 0.5 * 2.0;
    expected[7 * 2] += 0.5 * 0.5 * 2.0;
    assert_eq!(g.grad, expected);
}

#[test]
fn nbff_weight_validation() {
    assert!(Nbff::new(vec![0.5, 0.4]).is_err());
    assert!(Nbff::new(vec![]).is_err());
    assert!(Nbff::new(vec![f64::NAN, 1.0]).is_err());
    assert!(Nbff::new(vec![0.25; 4]).is_ok());
    for n in 1..12 {
        let sum: f64 = Nbff::uniform(n).unwrap().weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn boundary_falls_back_to_sample_cloning() {
    let env = TabularRingEnv::standard();
    let pol = Policy::sine_ring();
    let q = QApproximator::Tabular(TabularQ::from_values(
        32,
        2,
        (0..64).map(|i| i as f64 * 0.01).collect(),
    ));
    let short = window(&[env.grid_point(1), env.grid_point(2)], 1, 1.0);
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &env,
    };
    let mut rng = seeded(0, 1);
    let b = Bff.estimate(&ctx, &short, &mut rng).unwrap();
    let s = SampleCloning.estimate(&ctx, &short, &mut rng).unwrap();
    assert!(b.fallback);
    assert_eq!(b.grad, s.grad);
}

#[test]
fn estimators_are_pure() {
    let env = ContinuousRingEnv::standard();
    let pol = Policy::sine_ring();
    let q = ring_q(7);
    let w = window(&[0.3, 0.5, 0.6], 1, 1.1);
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &env,
    };
    for est in [
        &Bff as &dyn GradientEstimator,
        &SampleCloning,
        &UncorrelatedSampling,
    ] {
        let a = est.estimate(&ctx, &w, &mut seeded(3, 8)).unwrap();
        let b = est.estimate(&ctx, &w, &mut seeded(3, 8)).unwrap();
        assert_eq!(a, b);
    }
}

#[derive(Debug)]
struct Replay;

impl Environment for Replay {
    fn name(&self) -> &'static str {
        "replay"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn reset(&self, _rng: &mut brm::rng::SimRng) -> Vec<f64> {
        vec![0.0]
    }
    fn step(
        &self,
        state: &[f64],
        _a: usize,
        _rng: &mut brm::rng::SimRng,
    ) -> brm::Result<brm::mdp::Step> {
        Ok(brm::mdp::Step {
            next: state.to_vec(),
            reward: 0.0,
            terminal: false,
        })
    }
    fn supports_resampling(&self) -> bool {
        false
    }
}

#[test]
fn us_needs_a_simulator() {
    let q = ring_q(0);
    let pol = Policy::sine_ring();
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &Replay,
    };
    let err = UncorrelatedSampling
        .estimate(&ctx, &window(&[0.0, 0.1], 0, 0.0), &mut seeded(0, 1))
        .unwrap_err();
    assert!(matches!(err, Error::Unsupported { .. }));
}

#[test]
fn us_is_unbiased_on_small_ring() {
    let env = TabularRingEnv::new(8, 1.0, 1.0);
    let pol = Policy::sine_ring();
    let model = ExactModel::analytic(&env);
    let mut rng = seeded(21, 1);
    let vals: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..3.0)).collect();
    let q = QApproximator::Tabular(TabularQ::from_values(8, 2, vals));
    let target = Target::Eval(&pol);
    let gamma = 0.8;
    let (s, a) = (2, 1);
    let delta = expected_residual(&model, &q, target, gamma)[s * 2 + a];
    let mut grad_delta = [0.0; 16];
    for (k, p) in model.row(s, a).iter().enumerate() {
        let g = brm::approx::grad_residual(
            &q,
            target,
            &model.state(s),
            a,
            &model.state(k),
            gamma,
            false,
        );
        for (x, y) in grad_delta.iter_mut().zip(&g) {
            *x += p * y;
        }
    }
    let ctx = EstimatorContext {
        q: &q,
        target,
        gamma,
        env: &env,
    };
    let n = 100_000;
    let mut sum = [0.0; 16];
    let mut sum_sq = [0.0; 16];
    for _ in 0..n {
        let next = env.step(&model.state(s), a, &mut rng).unwrap();
        let w = TrajectoryWindow::from_states(
            1,
            &[model.state(s).to_vec(), next.next],
            a,
            next.reward,
            false,
        );
        let f = UncorrelatedSampling.estimate(&ctx, &w, &mut rng).unwrap();
        for i in 0..16 {
            sum[i] += f.grad[i];
            sum_sq[i] += f.grad[i] * f.grad[i];
        }
    }
    for i in 0..16 {
        let mean = sum[i] / n as f64;
        let se = ((sum_sq[i] / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        let exact = delta * grad_delta[i];
        assert!(
            (mean - exact).abs() <= 4.0 * se + 1e-12,
            "coordinate {i}: {mean} vs {exact} (se {se})"
        );
    }
}

#[test]
fn primal_dual_zero_dual_stalls_primal() {
    let env = TabularRingEnv::standard();
    let pol = Policy::sine_ring();
    let q = QApproximator::Tabular(TabularQ::from_values(32, 2, vec![0.3; 64]));
    let w = window(&[env.grid_point(0), env.grid_point(1)], 0, 1.0);
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &env,
    };
    let pd = PrimalDual::new(
        QApproximator::Tabular(TabularQ::zeros(32, 2)),
        Schedule::constant(0.1),
    );
    let g = pd.estimate(&ctx, &w, &mut seeded(0, 1)).unwrap();
    assert!(g.grad.iter().all(|x| *x == 0.0));
}

#[test]
fn primal_dual_hand_computed_step() {
    // two states {0, π}, tabular Q and y
    let q = QApproximator::Tabular(TabularQ::from_values(2, 2, vec![1.0, 2.0, 0.5, -1.0]));
    let mut y = QApproximator::Tabular(TabularQ::from_values(2, 2, vec![0.2, 0.0, 0.0, 0.0]));
    let pol = Policy::Uniform { actions: 2 };
    let env = TabularRingEnv::new(2, 1.0, 1.0);
    let w = window(&[0.0, std::f64::consts::PI], 0, 1.0);
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.5,
        env: &env,
    };
    // j = 1 + 0.5·(0.5·0.5 + 0.5·(−1)) − 1 = −0.125
    let step = pd_update(&ctx, &w, &mut y, 0.1);
    assert!((step.residual + 0.125).abs() < 1e-15);
    // ω(0,0) ← 0.2 + 0.1·(−0.125) − 0.2 = −0.0125; a tabular dual lands on β·j
    assert_eq!(step.dual_grad.len(), 4);
    assert!((step.dual_grad[0] + 0.2125).abs() < 1e-15);
    assert!(step.dual_grad[1..].iter().all(|g| *g == 0.0));
    assert!((y.params()[0] + 0.0125).abs() < 1e-15);
    // θ gradient = y_new · ∇j, ∇j = −e(0,0) + 0.5·0.5·(e(1,0) + e(1,1))
    let expected = [0.0125, 0.0, -0.0125 * 0.25, -0.0125 * 0.25];
    for (g, e) in step.theta_grad.iter().zip(expected) {
        assert!((g - e).abs() < 1e-15);
    }
}

#[test]
fn registry_builds_by_name() {
    let reg = EstimatorRegistry::with_builtins();
    let arch = Architecture::Tabular {
        states: 32,
        actions: 2,
    };
    let ctx = BuildContext {
        architecture: &arch,
        seed: 0,
    };
    for name in ["us", "sc", "bff", "pd"] {
        assert_eq!(
            reg.build(&EstimatorSpec::named(name), &ctx).unwrap().name(),
            name
        );
    }
    let n = reg.build(&EstimatorSpec::nbff(4), &ctx).unwrap();
    assert_eq!((n.name(), n.lookahead()), ("nbff", 4));
    assert_eq!(EstimatorSpec::nbff(4).label(), "4bff");
    assert!(matches!(
        reg.build(&EstimatorSpec::named("gtd"), &ctx),
        Err(Error::Unknown { .. })
    ));
    assert!(reg.build(&EstimatorSpec::named("nbff"), &ctx).is_err());
}

#[test]
fn registry_accepts_custom_strategies() {
    let mut reg = EstimatorRegistry::empty();
    reg.register("cloning", |_, _| Ok(Box::new(SampleCloning)));
    let arch = Architecture::Tabular {
        states: 4,
        actions: 2,
    };
    let ctx = BuildContext {
        architecture: &arch,
        seed: 0,
    };
    assert_eq!(
        reg.build(&EstimatorSpec::named("cloning"), &ctx)
            .unwrap()
            .name(),
        "sc"
    );
    assert_eq!(reg.names().collect::<Vec<_>>(), vec!["cloning"]);
}

#[test]
fn batch_mean_matches_members() {
    let env = ContinuousRingEnv::standard();
    let pol = Policy::sine_ring();
    let q = ring_q(2);
    let mut rng = seeded(1, 1);
    let windows: Vec<TrajectoryWindow> = (0..50)
        .map(|_| {
            let s0 = rng.gen_range(0.0..TAU);
            let z1 = standard_normal(&mut rng);
            let z2 = standard_normal(&mut rng);
            window(
                &[s0, s0 + 0.2 * z1, s0 + 0.2 * (z1 + z2)],
                rng.gen_range(0..2),
                1.0,
            )
        })
        .collect();
    let ctx = EstimatorContext {
        q: &q,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &env,
    };
    let mut bff = Bff;
    let batch = bff
        .batch_gradient(&ctx, &windows, &mut seeded(0, 8), 1)
        .unwrap();
    let mut mean = vec![0.0; q.num_params()];
    for w in &windows {
        let g = Bff.estimate(&ctx, w, &mut seeded(0, 8)).unwrap();
        for (m, x) in mean.iter_mut().zip(&g.grad) {
            *m += x;
        }
    }
    for (m, b) in mean.iter().zip(&batch.grad) {
        assert!((m / 50.0 - b).abs() <= 1e-15 * (1.0 + b.abs()));
    }
}
