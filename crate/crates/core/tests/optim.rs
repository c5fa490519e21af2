use brm::approx::{Architecture, QApproximator, TabularQ, Target};
use brm::estimators::{Bff, SampleCloning, UncorrelatedSampling};
use brm::mdp::{
    generate_trajectory, CartPoleEnv, ExplorationSchedule, Policy, TabularRingEnv, Trajectory,
};
use brm::optim::{
    sample_batch, train_offline, train_online, OnlineSettings, OptimizerSpec, ReplayBuffer,
    Schedule, TrainSettings,
};
use brm::rng::{seeded, streams};

fn settings(updates: u64) -> TrainSettings {
    TrainSettings {
        updates,
        batch_size: 50,
        gamma: 0.8,
        optimizer: OptimizerSpec::sgd(0.5),
        eval_every: 10,
    }
}

fn ring_data(len: usize, seed: u64) -> (TabularRingEnv, Trajectory) {
    let env = TabularRingEnv::standard();
    let traj = generate_trajectory(
        &env,
        &Policy::sine_ring(),
        len,
        &mut seeded(seed, streams::TRAJECTORY),
    )
    .unwrap();
    (env, traj)
}

#[test]
fn batch_starts_are_uniform() {
    let mut t = Trajectory::new(1);
    for m in 0..101 {
        t.push(&[m as f64], 0, 0.0, &[(m + 1) as f64], 0, false);
    }
    let mut rng = seeded(0, streams::BATCH);
    let draws = 1_000_000;
    let mut counts = vec![0usize; 100];
    let batch = 1000;
    for _ in 0..draws / batch {
        for w in sample_batch(&t, batch, 1, &mut rng).unwrap() {
            counts[w.current()[0] as usize] += 1;
        }
    }
    let p = 0.01;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - draws as f64 * p).abs() <= 4.0 * sd, "count {c}");
    }
}

#[test]
fn replay_drops_oldest() {
    let mut buf = ReplayBuffer::new(10_000);
    for m in 0..10_001 {
        buf.push(brm::mdp::TrajectoryWindow::from_states(
            1,
            &[vec![m as f64], vec![0.0]],
            0,
            0.0,
            false,
        ));
    }
    assert_eq!(buf.len(), 10_000);
    assert!(buf.iter().all(|w| w.current()[0] != 0.0));
}

#[test]
fn exploration_schedule_formula() {
    let s = ExplorationSchedule::default();
    let mut last = f64::INFINITY;
    for k in 0..2000u64 {
        let v = s.value(k);
        assert_eq!(v, 0.99f64.powf(k as f64).max(0.1));
        assert!(v <= last);
        last = v;
    }
}

#[test]
fn pd_schedules() {
    let beta = Schedule::PowerLaw {
        scale: 0.1,
        exponent: 0.75,
    };
    let eta = Schedule::PowerLaw {
        scale: 0.1,
        exponent: 0.5,
    };
    assert_eq!(beta.value(1), 0.1);
    assert!((beta.value(16) - 0.1 / 8.0).abs() < 1e-15);
    assert!((eta.value(100) - 0.01).abs() < 1e-15);
}

#[test]
fn zero_updates_leave_the_approximator() {
    let (env, traj) = ring_data(1000, 0);
    let pol = Policy::sine_ring();
    let mut q = QApproximator::Tabular(TabularQ::zeros(32, 2));
    let mut seen = Vec::new();
    let stats = train_offline(
        &mut q,
        &mut Bff,
        &env,
        Target::Eval(&pol),
        &traj,
        &settings(0),
        0,
        &mut |k, _| {
            seen.push(k);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(stats.updates, 0);
    assert_eq!(seen, vec![0]);
    assert!(q.params().iter().all(|x| *x == 0.0));
}

#[test]
fn offline_training_is_deterministic() {
    let (env, traj) = ring_data(20_000, 1);
    let pol = Policy::sine_ring();
    let run = || {
        let mut q = QApproximator::Tabular(TabularQ::zeros(32, 2));
        let mut curve = Vec::new();
        train_offline(
            &mut q,
            &mut UncorrelatedSampling,
            &env,
            Target::Eval(&pol),
            &traj,
            &settings(100),
            5,
            &mut |k, q| {
                curve.push((k, q.params().to_vec()));
                Ok(())
            },
        )
        .unwrap();
        curve
    };
    assert_eq!(run(), run());
}

#[test]
fn one_update_matches_manual_step() {
    let (env, traj) = ring_data(1000, 2);
    let pol = Policy::sine_ring();
    let mut q = QApproximator::Tabular(TabularQ::zeros(32, 2));
    let mut s = settings(1);
    s.optimizer = OptimizerSpec::sgd(0.5);
    train_offline(
        &mut q,
        &mut SampleCloning,
        &env,
        Target::Eval(&pol),
        &traj,
        &s,
        3,
        &mut |_, _| Ok(()),
    )
    .unwrap();

    let mut rng = seeded(3, streams::BATCH);
    let batch = sample_batch(&traj, 50, 0, &mut rng).unwrap();
    let zero = QApproximator::Tabular(TabularQ::zeros(32, 2));
    let ctx = brm::estimators::EstimatorContext {
        q: &zero,
        target: Target::Eval(&pol),
        gamma: 0.8,
        env: &env,
    };
    let mut sc = SampleCloning;
    let g = brm::estimators::GradientEstimator::batch_gradient(
        &mut sc,
        &ctx,
        &batch,
        &mut seeded(3, 8),
        1,
    )
    .unwrap();
    let expected: Vec<f64> = g.grad.iter().map(|x| -0.5 * x).collect();
    assert_eq!(q.params(), expected.as_slice());
}

#[test]
fn online_training_runs_episodes() {
    let env = CartPoleEnv::default();
    let arch = Architecture::Mlp(brm::approx::MlpArchitecture::cartpole());
    let mut q = arch.init(&mut seeded(0, streams::INIT));
    let settings = OnlineSettings {
        episodes: 5,
        batch_size: 10,
        gamma: 0.99,
        optimizer: OptimizerSpec::adam(1e-3),
        replay_capacity: 100,
        exploration: ExplorationSchedule::default(),
    };
    let mut rewards = Vec::new();
    let stats = train_online(
        &mut q,
        &mut Bff,
        &env,
        Target::Ctrl,
        &settings,
        0,
        &mut |_, r, _| {
            rewards.push(r);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(rewards.len(), 5);
    assert_eq!(stats.episode_rewards, rewards);
    assert!(stats.updates > 0);
    assert!(stats.fallbacks > 0);
    assert!(rewards.iter().all(|r| (0.0..=200.0).contains(r)));
}
