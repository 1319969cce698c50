use nalgebra::DVector;
use rand::Rng;

use crate::markov::ChainModel;

/// Draws `(next_state, reward)` from row `current` of the chain. The reward
/// belongs to the current state.
pub fn sample_transition<R: Rng + ?Sized>(
    chain: &ChainModel,
    current: usize,
    rng: &mut R,
) -> (usize, f64) {
    let row = chain.transition().row(current);
    let next = draw_from(row.iter().copied(), rng.random::<f64>(), chain.n_states());
    (next, chain.reward()[current])
}

fn draw_from(weights: impl Iterator<Item = f64>, u: f64, n: usize) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, p) in weights.enumerate() {
        if p > 0.0 {
            last_positive = j;
            acc += p;
            if u < acc {
                return j;
            }
        }
    }
    // Rounding can leave acc a hair below one.
    last_positive.min(n - 1)
}

/// Sampler with precomputed cumulative rows for long simulations.
#[derive(Clone, Debug)]
pub struct ChainSampler {
    cumulative: Vec<Vec<f64>>,
    reward: DVector<f64>,
}

impl ChainSampler {
    pub fn new(chain: &ChainModel) -> Self {
        let cumulative = chain
            .transition()
            .row_iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|&p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        ChainSampler {
            cumulative,
            reward: chain.reward().clone(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.cumulative.len()
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.n_states())
    }

    pub fn step<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> (usize, f64) {
        let cdf = &self.cumulative[current];
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        // First state whose cumulative mass exceeds u; zero-mass states
        // share their predecessor's value and are never selected.
        let next = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        (next, self.reward[current])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> ChainModel {
        ChainModel::new(
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.2, 0.3, 0.5, 0.5, 0.0, 0.5]),
            DVector::from_column_slice(&[0.1, 0.2, 0.9]),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_row() {
        let c = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sampler = ChainSampler::new(&c);
        for _ in 0..100 {
            assert_eq!(sample_transition(&c, 0, &mut rng), (1, 0.1));
            assert_eq!(sampler.step(0, &mut rng), (1, 0.1));
        }
    }

    #[test]
    fn never_lands_on_zero_probability() {
        let c = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sampler = ChainSampler::new(&c);
        for _ in 0..10_000 {
            assert_ne!(sample_transition(&c, 2, &mut rng).0, 1);
            assert_ne!(sampler.step(2, &mut rng).0, 1);
        }
    }

    #[test]
    fn reward_is_current_state() {
        let c = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in 0..3 {
            assert_eq!(sample_transition(&c, s, &mut rng).1, c.reward()[s]);
        }
    }
}
