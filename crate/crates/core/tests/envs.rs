use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdlab::envs::{
    boyan_chain, generate_mrp, sample_boyan_policy, sample_transition, AccessControl, AccessControlState,
    ChainSampler, ControlEnv, Pendulum, PendulumState, ACCEPT, PENDULUM_TORQUES, REJECT,
};
use tdlab::markov::{verify_ergodic, ChainModel};

#[test]
fn spacing_rows_have_uniform_mean() {
    // Spacings of n - 1 sorted uniforms are exchangeable with mean 1/n.
    let n = 20;
    let chains = 50;
    let mut mean = DMatrix::zeros(1, n);
    for s in 0..chains {
        let chain = generate_mrp(n, s).unwrap();
        assert!(verify_ergodic(&chain).is_ergodic());
        for row in chain.transition().row_iter() {
            mean += row / (n * chains as usize) as f64;
        }
    }
    // Each entry is Beta(1, n - 1): variance (n - 1) / (n^2 (n + 1)).
    let var = (n - 1) as f64 / ((n * n) as f64 * (n + 1) as f64);
    let se = (var / (n * chains as usize) as f64).sqrt();
    for j in 0..n {
        assert!((mean[(0, j)] - 1.0 / n as f64).abs() < 4.0 * se, "column {j}");
    }
}

#[test]
fn sampler_frequencies_match_rows() {
    let chain = generate_mrp(6, 21).unwrap();
    let sampler = ChainSampler::new(&chain);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let draws = 100_000;
    for from in [0, 3] {
        let mut counts = [0usize; 6];
        for _ in 0..draws {
            let (next, r) = sampler.step(from, &mut rng);
            assert_eq!(r, chain.reward()[from]);
            counts[next] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = chain.transition()[(from, j)];
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sd + 1.0, "{from}->{j}");
        }
    }
}

#[test]
fn deterministic_row_is_followed() {
    let chain = ChainModel::new(
        DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.5]),
        nalgebra::DVector::from_column_slice(&[0.1, 0.2, 0.3]),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        assert_eq!(sample_transition(&chain, 0, &mut rng), (1, 0.1));
        assert_eq!(sample_transition(&chain, 1, &mut rng).0, 2);
    }
}

#[test]
fn boyan_structure() {
    for seed in 0..20 {
        let (chain, actions) = sample_boyan_policy(seed);
        assert!(verify_ergodic(&chain).is_ergodic());
        let p = chain.transition();
        for i in 1..13 {
            let ones = p.row(i).iter().filter(|&&x| x == 1.0).count();
            assert_eq!(ones, 1, "state {i}");
        }
        assert!(p.row(0).iter().all(|&x| (x - 1.0 / 13.0).abs() < 1e-15));
        for i in 2..13 {
            let (target, reward) = if actions[i] { (i - 1, 1.0) } else { (i - 2, 0.5) };
            assert_eq!(p[(i, target)], 1.0);
            assert_eq!(chain.reward()[i], reward);
        }
    }
    let all_a1 = boyan_chain(&[true; 13]);
    assert!(all_a1.reward().iter().all(|&r| r == 1.0));
}

#[test]
fn access_control_invariants() {
    let env = AccessControl::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut s = env.initial_state(&mut rng);
    assert_eq!(s.free_servers, 10);
    let rewards = [0.0, 0.125, 0.25, 0.5, 1.0];
    for t in 0..100_000 {
        let mask = env.feasible(&s);
        assert_eq!(mask[ACCEPT], s.free_servers > 0);
        assert!(mask[REJECT]);
        let a = if s.free_servers > 0 && t % 3 != 0 { ACCEPT } else { REJECT };
        let (next, r) = env.step(&s, a, &mut rng).unwrap();
        assert!(next.free_servers <= 10);
        assert!((1..=4).contains(&next.customer_class));
        assert!(rewards.contains(&r));
        let obs = env.observe(&next);
        assert!(obs.iter().all(|x| (0.0..=1.0).contains(x)));
        s = next;
    }
    let full = AccessControlState {
        free_servers: 0,
        customer_class: 2,
    };
    assert!(env.step(&full, ACCEPT, &mut rng).is_err());
}

#[test]
fn access_control_release_is_binomial() {
    // All ten servers busy and the customer rejected: the number released is
    // Binomial(10, 0.06).
    let env = AccessControl::default();
    let state = AccessControlState {
        free_servers: 0,
        customer_class: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 100_000;
    let mut counts = [0usize; 11];
    for _ in 0..draws {
        let (next, _) = env.step_with(&state, REJECT, &mut rng).unwrap();
        counts[next.free_servers] += 1;
    }
    let mut pmf = 0.94f64.powi(10);
    for (k, &c) in counts.iter().enumerate() {
        let sd = (draws as f64 * pmf * (1.0 - pmf)).sqrt();
        assert!((c as f64 - draws as f64 * pmf).abs() <= 3.5 * sd + 1.0, "k = {k}");
        pmf *= (10 - k) as f64 / (k + 1) as f64 * 0.06 / 0.94;
    }
}

#[test]
fn pendulum_rewards_and_clipping() {
    let upright = PendulumState {
        angle: 0.0,
        angular_velocity: 0.0,
    };
    assert_eq!(Pendulum::reward(&upright, 0.0), 0.0);
    let down = PendulumState {
        angle: PI,
        angular_velocity: 0.0,
    };
    assert!((Pendulum::reward(&down, 0.0) + PI * PI / 16.27).abs() < 1e-12);

    let env = Pendulum;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut s = env.initial_state(&mut rng);
    for t in 0..100_000 {
        let a = (t * 7 + t / 13) % PENDULUM_TORQUES.len();
        let (next, r) = env.step(&s, a, &mut rng).unwrap();
        assert!((-1.0 - 1e-3..=0.0).contains(&r));
        assert!(next.angular_velocity.abs() <= 8.0);
        assert!(next.angle > -PI && next.angle <= PI);
        s = next;
    }
}
