mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdlab::envs::generate_mrp;
use tdlab::features::{build_fourier_map, build_random_features};
use tdlab::harness::Reduction;
use tdlab::markov::{ChainSolution, OracleSolution};
use tdlab::td::{
    canonical_form, evaluation_loss, LearnerState, ProjectionConfig, StepSchedule, Variant,
};

fn schedule() -> impl Strategy<Value = StepSchedule> {
    (0.01f64..10.0, 0.05f64..=1.0, 0usize..300, 1usize..500, 0.01f64..3.0, 0u8..3).prop_map(
        |(beta0, s, hold, offset, c, kind)| match kind {
            0 => StepSchedule::constant(beta0, c),
            1 => StepSchedule::poly(beta0, s, hold, c),
            _ => StepSchedule::offset_poly(beta0, s, offset, hold, c),
        },
    )
}

fn vector(d: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-scale..scale, d).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn schedules_are_positive_and_nonincreasing(sched in schedule(), t in 0usize..100_000) {
        sched.validate().unwrap();
        let (now, next) = (sched.beta_at(t), sched.beta_at(t + 1));
        prop_assert!(now > 0.0 && next > 0.0);
        prop_assert!(next <= now);
        prop_assert!(sched.beta_at(0) <= sched.beta0);
        prop_assert!((sched.alpha_at(t) - sched.c_alpha * now).abs() <= 1e-15 * now.max(1.0));
    }

    #[test]
    fn joint_projection_caps_and_is_idempotent(
        omega in -50.0f64..50.0, theta in vector(6, 50.0), r in 0.1f64..100.0,
    ) {
        let mut s = LearnerState::new(omega, theta);
        let before = (s.omega_hat.powi(2) + s.theta_hat.norm_squared()).sqrt();
        s.project(&ProjectionConfig::joint(r));
        let after = (s.omega_hat.powi(2) + s.theta_hat.norm_squared()).sqrt();
        prop_assert!(after <= r * (1.0 + 1e-12));
        prop_assert!(after <= before * (1.0 + 1e-12));
        let once = s.clone();
        s.project(&ProjectionConfig::joint(r));
        prop_assert!((s.omega_hat - once.omega_hat).abs() <= 1e-12 * r);
        prop_assert!((&s.theta_hat - &once.theta_hat).amax() <= 1e-12 * r);
    }

    #[test]
    fn separate_projection_caps_and_is_idempotent(
        omega in -50.0f64..50.0, theta in vector(6, 50.0), r in 0.1f64..100.0, r_omega in 0.1f64..5.0,
    ) {
        let config = ProjectionConfig::separate(r, r_omega);
        let mut s = LearnerState::new(omega, theta.clone());
        s.project(&config);
        prop_assert!(s.omega_hat.abs() <= r_omega);
        prop_assert!(s.theta_hat.norm() <= r * (1.0 + 1e-12));
        if theta.norm() <= r {
            prop_assert_eq!(&s.theta_hat, &theta);
        }
        let once = s.clone();
        s.project(&config);
        prop_assert!((&s.theta_hat - &once.theta_hat).amax() <= 1e-12 * r);
        prop_assert_eq!(s.omega_hat, once.omega_hat);
    }

    #[test]
    fn damping_lies_in_unit_interval_and_dominates_gamma(
        seed in any::<u64>(), d in 1usize..8, lambda in 0.0f64..0.95,
        beta in 1e-4f64..50.0, c in 0.01f64..5.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = common::random_step(d, lambda, 30, &mut rng);
        let z = &step.trace_before * lambda + &step.phi;
        let canon = canonical_form(&step.transition(), &z, beta, c, lambda);
        for i in 0..=d {
            for j in 0..=d {
                let v = canon.d_matrix[(i, j)];
                if i == j {
                    prop_assert!(v > 0.0 && v <= 1.0);
                    prop_assert!(canon.gamma_t <= v * (1.0 + 1e-12));
                } else {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn implicit_average_reward_stays_between_estimate_and_reward(
        seed in any::<u64>(), beta in 1e-4f64..1e4, c in 0.01f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = common::random_step(4, 0.5, 10, &mut rng);
        let mut s = step.state();
        let delta = s.td_error(&step.transition());
        s.step(Variant::Implicit, &step.transition(), beta, c, 0.5).unwrap();
        let (lo, hi) = (step.omega.min(step.reward), step.omega.max(step.reward));
        prop_assert!(s.omega_hat >= lo - 1e-12 && s.omega_hat <= hi + 1e-12);
        // The effective weight step is at most 1/|z|^2 however large beta is.
        let moved = (&s.theta_hat - &step.theta).norm();
        prop_assert!(moved <= delta.abs() / s.trace.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn fourier_features_are_bounded(
        seed in any::<u64>(), dim in 1usize..5, n in 1usize..80, gamma in 0.01f64..5.0,
        x in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let map = build_fourier_map(dim, n, gamma, seed).unwrap();
        let z = map.evaluate(&x[..dim]);
        prop_assert_eq!(z.len(), n);
        prop_assert!(z.iter().all(|v| v.abs() <= map.amplitude() + 1e-15));
        prop_assert!(z.norm() <= 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn reductions_of_constant_series(value in -1e6f64..1e6, len in 1usize..200, k in 1usize..300) {
        let series = vec![value; len];
        for r in [Reduction::Final, Reduction::Mean, Reduction::TailMean(k)] {
            let got = r.apply(&series);
            prop_assert!((got - value).abs() <= 1e-12 * value.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_chains_and_losses(seed in any::<u64>(), n in 3usize..25, theta in vector(3, 20.0), omega in -2.0f64..2.0) {
        let chain = generate_mrp(n, seed).unwrap();
        for row in chain.transition().row_iter() {
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        prop_assert!(chain.reward().iter().all(|&r| (0.0..=1.0).contains(&r)));

        let sol = ChainSolution::solve(&chain).unwrap();
        prop_assert!(sol.pi.iter().all(|&p| p >= 0.0));
        prop_assert!((sol.pi.sum() - 1.0).abs() < 1e-12);
        prop_assert!(sol.pi.dot(&sol.v).abs() < 1e-8);

        let features = build_random_features(n, 3, &sol.v, seed ^ 1).unwrap();
        prop_assert!(features.matrix().row_iter().all(|r| r.norm() <= 1.0 + 1e-12));
        let oracle = OracleSolution::compute(&chain, &sol, &features, 0.25).unwrap();
        let p = &oracle.projector;
        prop_assert!((p * p - p).amax() < 1e-10);

        let loss = evaluation_loss(&LearnerState::new(omega, theta.clone()), &oracle).unwrap();
        prop_assert!(loss >= 0.0);
        let shifted = &theta + &oracle.theta_e * 3.7;
        let same = evaluation_loss(&LearnerState::new(omega, shifted), &oracle).unwrap();
        prop_assert!((loss - same).abs() <= 1e-9 * (1.0 + loss));
        let exact = LearnerState::new(oracle.omega, oracle.theta_star.clone());
        prop_assert!(evaluation_loss(&exact, &oracle).unwrap() < 1e-20);
    }
}
