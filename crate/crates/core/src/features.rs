//! Feature matrices for the tabular chains and random Fourier feature maps
//! for the control environments.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::markov::numerical_rank;

const ROW_NORM_SLACK: f64 = 1e-12;
const MAX_RESAMPLES: usize = 100;

/// Feature matrix `Phi` whose i-th row is the feature vector of state i,
/// together with the global constant it was divided by.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    matrix: DMatrix<f64>,
    scale: f64,
}

impl FeatureMatrix {
    /// Wraps an already-normalized matrix, checking row norms and rank.
    pub fn from_matrix(matrix: DMatrix<f64>, scale: f64) -> Result<Self> {
        if let Some((i, norm)) = matrix
            .row_iter()
            .map(|r| r.norm())
            .enumerate()
            .find(|(_, n)| *n > 1.0 + ROW_NORM_SLACK)
        {
            return Err(Error::Config(vec![format!(
                "feature row {i} has norm {norm} > 1"
            )]));
        }
        let rank = column_rank(&matrix);
        if rank < matrix.ncols() {
            return Err(Error::RankDeficient {
                rank,
                expected: matrix.ncols(),
            });
        }
        Ok(FeatureMatrix { matrix, scale })
    }

    #[cfg(test)]
    pub(crate) fn unchecked(matrix: DMatrix<f64>, scale: f64) -> Self {
        FeatureMatrix { matrix, scale }
    }

    /// Divides the whole matrix by its largest row norm. One constant for
    /// all rows keeps the column space, so columns stay exactly
    /// representable.
    pub fn globally_normalized(raw: DMatrix<f64>) -> Result<Self> {
        let scale = raw.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::RankDeficient {
                rank: 0,
                expected: raw.ncols(),
            });
        }
        Self::from_matrix(raw / scale, scale)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, state: usize) -> DVector<f64> {
        self.matrix.row(state).transpose()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (0..self.dim()).map(|j| format!("phi{j}")).collect();
        out.push_str("state,");
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, row) in self.matrix.row_iter().enumerate() {
            out.push_str(&i.to_string());
            for x in row.iter() {
                out.push_str(&format!(",{x:.16e}"));
            }
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn column_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() < m.ncols() {
        return m.nrows().min(m.ncols());
    }
    let sv = m.singular_values();
    numerical_rank(sv.as_slice(), m.nrows().max(m.ncols()))
}

fn append_constant_and_value(block: DMatrix<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let n = block.nrows();
    let k = block.ncols();
    let mut out = block.resize_horizontally(k + 2, 1.0);
    out.set_column(k + 1, v);
    debug_assert_eq!(out.nrows(), n);
    out
}

/// `[Bernoulli(0.5) block | e | v]`, redrawn until full column rank, then
/// globally normalized.
pub fn build_random_features(
    n_states: usize,
    d: usize,
    v: &DVector<f64>,
    seed: u64,
) -> Result<FeatureMatrix> {
    build_random_features_with(n_states, d, v, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn build_random_features_with<R: Rng + ?Sized>(
    n_states: usize,
    d: usize,
    v: &DVector<f64>,
    rng: &mut R,
) -> Result<FeatureMatrix> {
    if d < 3 {
        return Err(Error::Config(vec![format!("feature dimension d = {d} < 3")]));
    }
    if v.len() != n_states {
        return Err(Error::DimensionMismatch {
            expected: n_states,
            found: v.len(),
        });
    }
    for _ in 0..MAX_RESAMPLES {
        let block = DMatrix::from_fn(n_states, d - 2, |_, _| {
            if rng.random_bool(0.5) {
                1.0
            } else {
                0.0
            }
        });
        let raw = append_constant_and_value(block, v);
        if column_rank(&raw) == d {
            return FeatureMatrix::globally_normalized(raw);
        }
    }
    Err(Error::RankFailure {
        attempts: MAX_RESAMPLES,
    })
}

/// The 13 x 4 interpolation block: state `s` sits at position `s / 4` on
/// the line through the four one-hot vectors.
pub fn boyan_interpolation_block() -> DMatrix<f64> {
    DMatrix::from_fn(13, 4, |s, j| {
        let position = s as f64 / 4.0;
        (1.0 - (position - j as f64).abs()).max(0.0)
    })
}

/// Boyan features `[interpolation | e | v]`, globally normalized, with
/// any column that is a linear combination of earlier ones removed. The
/// interpolation rows sum to one, so `e` is always dropped; it stays
/// exactly representable through the block.
pub fn build_boyan_features(v: &DVector<f64>) -> Result<FeatureMatrix> {
    if v.len() != 13 {
        return Err(Error::DimensionMismatch {
            expected: 13,
            found: v.len(),
        });
    }
    let raw = drop_dependent_columns(append_constant_and_value(boyan_interpolation_block(), v));
    FeatureMatrix::globally_normalized(raw)
}

fn drop_dependent_columns(m: DMatrix<f64>) -> DMatrix<f64> {
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for col in m.column_iter() {
        let mut candidate = kept.clone();
        candidate.push(col.into_owned());
        if column_rank(&DMatrix::from_columns(&candidate)) == candidate.len() {
            kept = candidate;
        }
    }
    DMatrix::from_columns(&kept)
}

/// Random Fourier feature map approximating `exp(-gamma |x - y|^2)` on
/// inputs rescaled to the unit box.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierFeatureMap {
    frequencies: DMatrix<f64>,
    offsets: DVector<f64>,
    amplitude: f64,
    input_lo: Vec<f64>,
    input_hi: Vec<f64>,
}

impl FourierFeatureMap {
    pub fn n_features(&self) -> usize {
        self.offsets.len()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Sets per-dimension bounds mapped onto `[0, 1]` before featurizing.
    pub fn with_bounds(mut self, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = self.input_dim();
        for b in [lo, hi] {
            if b.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.len(),
                });
            }
        }
        if lo.iter().zip(hi).any(|(l, h)| !(h > l)) {
            return Err(Error::Config(vec!["feature bounds need lo < hi".into()]));
        }
        self.input_lo = lo.to_vec();
        self.input_hi = hi.to_vec();
        Ok(self)
    }

    /// Evaluates on an input already expressed in the unit box.
    pub fn evaluate_unit(&self, x: &[f64]) -> DVector<f64> {
        let x = DVector::from_column_slice(x);
        let mut z = &self.frequencies * x + &self.offsets;
        z.apply(|a| *a = self.amplitude * a.cos());
        z
    }

    pub fn evaluate(&self, x: &[f64]) -> DVector<f64> {
        let scaled: Vec<f64> = x
            .iter()
            .zip(self.input_lo.iter().zip(&self.input_hi))
            .map(|(&v, (&lo, &hi))| (v - lo) / (hi - lo))
            .collect();
        self.evaluate_unit(&scaled)
    }
}

/// Draws a random Fourier feature map with `n_features` components.
pub fn build_fourier_map(
    input_dim: usize,
    n_features: usize,
    gamma: f64,
    seed: u64,
) -> Result<FourierFeatureMap> {
    build_fourier_map_with(input_dim, n_features, gamma, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn build_fourier_map_with<R: Rng + ?Sized>(
    input_dim: usize,
    n_features: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<FourierFeatureMap> {
    if n_features == 0 || input_dim == 0 || !(gamma > 0.0) {
        return Err(Error::Config(vec![format!(
            "fourier map needs n_features >= 1, input_dim >= 1, gamma > 0 \
             (got {n_features}, {input_dim}, {gamma})"
        )]));
    }
    let sd = (2.0 * gamma).sqrt();
    let frequencies = DMatrix::from_fn(n_features, input_dim, |_, _| {
        sd * rng.sample::<f64, _>(StandardNormal)
    });
    let offsets = DVector::from_fn(n_features, |_, _| rng.random_range(0.0..2.0 * PI));
    Ok(FourierFeatureMap {
        frequencies,
        offsets,
        amplitude: (2.0 / n_features as f64).sqrt(),
        input_lo: vec![0.0; input_dim],
        input_hi: vec![1.0; input_dim],
    })
}

/// Several Fourier maps over the same input, concatenated and divided by
/// `sqrt(2 * maps)` so every output has norm at most one.
#[derive(Clone, Debug)]
pub struct StateFeaturizer {
    maps: Vec<FourierFeatureMap>,
    rescale: f64,
}

impl StateFeaturizer {
    pub fn new(maps: Vec<FourierFeatureMap>) -> Self {
        let rescale = (2.0 * maps.len() as f64).sqrt();
        StateFeaturizer { maps, rescale }
    }

    pub fn dim(&self) -> usize {
        self.maps.iter().map(FourierFeatureMap::n_features).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> DVector<f64> {
        let parts: Vec<f64> = self
            .maps
            .iter()
            .flat_map(|m| m.evaluate(x).iter().copied().collect::<Vec<_>>())
            .map(|v| v / self.rescale)
            .collect();
        DVector::from_vec(parts)
    }
}

/// `phi(s) (x) e_a`: the state features placed in the block of `action`.
pub fn joint_state_action_features(
    state_features: &DVector<f64>,
    action: usize,
    n_actions: usize,
) -> Result<DVector<f64>> {
    if action >= n_actions {
        return Err(Error::IndexOutOfRange {
            index: action,
            len: n_actions,
        });
    }
    let d = state_features.len();
    let mut out = DVector::zeros(d * n_actions);
    out.rows_mut(action * d, d).copy_from(state_features);
    Ok(out)
}
