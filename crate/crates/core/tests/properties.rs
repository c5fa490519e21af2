use brm::mdp::{
    generate_trajectory, wrap_angle, CartPoleEnv, ContinuousRingEnv, Environment, Policy,
    TabularRingEnv, TAU,
};
use brm::rng::{seeded, streams};
use proptest::prelude::*;

fn signed_gap(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policies_are_distributions(s in -20.0f64..20.0) {
        for pol in [Policy::sine_ring(), Policy::Uniform { actions: 2 }] {
            let p = pol.probs(&[s]);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrapped_angles_stay_on_the_circle(s in -1e3f64..1e3) {
        let w = wrap_angle(s);
        prop_assert!((0.0..TAU).contains(&w));
        prop_assert!(signed_gap(s, w).abs() < 1e-9);
    }

    #[test]
    fn ring_trajectories_chain(seed in 0u64..1000, len in 2usize..200) {
        let env = ContinuousRingEnv::standard();
        let t = generate_trajectory(&env, &Policy::sine_ring(), len, &mut seeded(seed, streams::TRAJECTORY)).unwrap();
        prop_assert_eq!(t.len(), len);
        for m in 0..len - 1 {
            prop_assert_eq!(t.next_state(m), t.state(m + 1));
        }
    }

    #[test]
    fn tabular_states_lie_on_the_grid(seed in 0u64..1000) {
        let env = TabularRingEnv::standard();
        let t = generate_trajectory(&env, &Policy::sine_ring(), 100, &mut seeded(seed, streams::TRAJECTORY)).unwrap();
        for m in 0..t.len() {
            let s = t.next_state(m)[0];
            prop_assert_eq!(s, env.grid_point(env.index_of(s)));
        }
    }

    #[test]
    fn cartpole_episodes_chain_within_an_episode(seed in 0u64..200) {
        let env = CartPoleEnv::default();
        let t = generate_trajectory(&env, &Policy::Uniform { actions: 2 }, 300, &mut seeded(seed, streams::TRAJECTORY)).unwrap();
        for m in 0..t.len() - 1 {
            if t.episode(m) == t.episode(m + 1) {
                prop_assert_eq!(t.next_state(m), t.state(m + 1));
                prop_assert!(!t.is_terminal(m));
            }
        }
    }

    #[test]
    fn equal_seeds_give_equal_trajectories(seed in 0u64..1000) {
        let env = ContinuousRingEnv::standard();
        let pol = Policy::sine_ring();
        let a = generate_trajectory(&env, &pol, 50, &mut seeded(seed, streams::TRAJECTORY)).unwrap();
        let b = generate_trajectory(&env, &pol, 50, &mut seeded(seed, streams::TRAJECTORY)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn resampled_increments_have_the_kernel_moments(s in 0.0f64..TAU, action in 0usize..2, seed in 0u64..100) {
        let env = ContinuousRingEnv::standard();
        let mut rng = seeded(seed, streams::RESAMPLE);
        let n = 20_000;
        let gaps: Vec<f64> = (0..n)
            .map(|_| signed_gap(s, env.resample_next(&[s], action, &mut rng).unwrap()[0]))
            .collect();
        let mean = gaps.iter().sum::<f64>() / n as f64;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let want_var = env.sigma * env.sigma * env.epsilon;
        let drift = env.drift(s, action) * env.epsilon;
        prop_assert!((mean - drift).abs() < 5.0 * (want_var / n as f64).sqrt());
        prop_assert!((var / want_var - 1.0).abs() < 0.05);
    }
}
