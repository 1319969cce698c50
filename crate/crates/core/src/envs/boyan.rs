use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::markov::ChainModel;

pub const BOYAN_STATES: usize = 13;

/// Chain induced by a deterministic policy on the 13-state Boyan chain.
/// `actions[i]` is false for `a0` (jump two, reward 0.5) and true for `a1`
/// (jump one, reward 1). State 1 always moves to 0; state 0 restarts
/// uniformly.
pub fn boyan_chain(actions: &[bool; BOYAN_STATES]) -> ChainModel {
    let n = BOYAN_STATES;
    let mut transition = DMatrix::zeros(n, n);
    transition.row_mut(0).fill(1.0 / n as f64);
    transition[(1, 0)] = 1.0;
    for i in 2..n {
        let target = if actions[i] { i - 1 } else { i - 2 };
        transition[(i, target)] = 1.0;
    }
    let reward = DVector::from_fn(n, |i, _| if actions[i] { 1.0 } else { 0.5 });
    ChainModel::new(transition, reward).expect("Boyan chain is a valid model")
}

/// Draws one action per state by a fair coin and returns the induced chain
/// along with the chosen actions.
pub fn sample_boyan_policy(seed: u64) -> (ChainModel, [bool; BOYAN_STATES]) {
    sample_boyan_policy_with(&mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_boyan_policy_with<R: Rng + ?Sized>(
    rng: &mut R,
) -> (ChainModel, [bool; BOYAN_STATES]) {
    let mut actions = [false; BOYAN_STATES];
    actions.iter_mut().for_each(|a| *a = rng.random_bool(0.5));
    (boyan_chain(&actions), actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{average_reward, stationary_distribution, verify_ergodic};

    #[test]
    fn all_a1_policy_has_unit_average_reward() {
        let c = boyan_chain(&[true; BOYAN_STATES]);
        assert!(c.reward().iter().all(|&r| r == 1.0));
        let pi = stationary_distribution(&c).unwrap();
        assert!((average_reward(&pi, c.reward()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn structure_of_rows() {
        for seed in 0..50 {
            let (c, actions) = sample_boyan_policy(seed);
            let p = c.transition();
            for j in 0..BOYAN_STATES {
                assert_eq!(p[(0, j)], 1.0 / 13.0);
            }
            for i in 1..BOYAN_STATES {
                let ones = p.row(i).iter().filter(|&&x| x == 1.0).count();
                let zeros = p.row(i).iter().filter(|&&x| x == 0.0).count();
                assert_eq!((ones, zeros), (1, BOYAN_STATES - 1));
            }
            assert_eq!(p[(1, 0)], 1.0);
            for i in 2..BOYAN_STATES {
                let expected = if actions[i] { i - 1 } else { i - 2 };
                assert_eq!(p[(i, expected)], 1.0);
                assert_eq!(c.reward()[i], if actions[i] { 1.0 } else { 0.5 });
            }
        }
    }

    #[test]
    fn every_sampled_policy_is_ergodic() {
        for seed in 0..200 {
            let (c, _) = sample_boyan_policy(seed);
            assert!(verify_ergodic(&c).is_ergodic(), "seed {seed}");
        }
    }
}
