use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{verify_ergodic, ChainModel};

/// Random Markov reward process: each row is the spacings of `n - 1`
/// sorted uniforms on `[0, 1]`, rewards are i.i.d. uniform.
pub fn generate_mrp(n_states: usize, seed: u64) -> Result<ChainModel> {
    generate_mrp_with(n_states, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn generate_mrp_with<R: Rng + ?Sized>(n_states: usize, rng: &mut R) -> Result<ChainModel> {
    if n_states < 2 {
        return Err(Error::Config(vec![format!("n_states = {n_states} < 2")]));
    }
    let n = n_states;
    let mut transition = DMatrix::zeros(n, n);
    let mut cuts = vec![0.0; n - 1];
    for i in 0..n {
        cuts.iter_mut().for_each(|c| *c = rng.random::<f64>());
        cuts.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for (j, &c) in cuts.iter().enumerate() {
            transition[(i, j)] = c - prev;
            prev = c;
        }
        // The last entry completes the row sum exactly.
        let head: f64 = transition.row(i).columns(0, n - 1).sum();
        transition[(i, n - 1)] = 1.0 - head;
    }
    let reward = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let chain = ChainModel::new(transition, reward)?;
    let report = verify_ergodic(&chain);
    if !report.is_ergodic() {
        return Err(Error::InvalidChain(report.diagnostic()));
    }
    Ok(chain)
}
