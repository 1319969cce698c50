//! Exact oracle quantities for a finite Markov reward process.
//!
//! Everything here is a dense direct solve: the chains used in the
//! experiments have at most a few hundred states, so exactness of the
//! reference values matters more than scale.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Numerical tolerances used when validating chains and oracle solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Entry-level checks: row sums, nonnegativity, positive-entry digraph.
    pub entry: f64,
    /// Residual checks after a linear solve.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            entry: 1e-12,
            residual: 1e-8,
        }
    }
}

/// Transition matrix and per-state reward of a Markov reward process
/// induced by a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel {
    transition: DMatrix<f64>,
    reward: DVector<f64>,
}

impl ChainModel {
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>) -> Result<Self> {
        Self::with_tolerance(transition, reward, Tolerances::default().entry)
    }

    pub fn with_tolerance(
        transition: DMatrix<f64>,
        reward: DVector<f64>,
        tol: f64,
    ) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 {
            return Err(Error::InvalidChain("chain has no states".into()));
        }
        if transition.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: transition.ncols(),
            });
        }
        if reward.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: reward.len(),
            });
        }
        for (i, row) in transition.row_iter().enumerate() {
            if let Some(bad) = row.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidChain(format!(
                    "row {i} has invalid entry {bad}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidChain(format!("row {i} sums to {sum}")));
            }
        }
        if let Some((i, r)) = reward
            .iter()
            .enumerate()
            .find(|(_, r)| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::InvalidChain(format!(
                "reward {r} of state {i} outside [0, 1]"
            )));
        }
        Ok(ChainModel { transition, reward })
    }

    pub fn n_states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }
}

/// Outcome of the irreducibility / aperiodicity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    /// Period of state 0. Only meaningful when the chain is irreducible.
    pub period: usize,
}

impl ErgodicityReport {
    pub fn is_ergodic(&self) -> bool {
        self.irreducible && self.period == 1
    }

    pub fn diagnostic(&self) -> String {
        match (self.irreducible, self.period) {
            (false, _) => "reducible: positive-entry digraph is not strongly connected".into(),
            (true, 1) => "ergodic".into(),
            (true, p) => format!("periodic with period {p}"),
        }
    }
}

fn reachable(adjacency: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adjacency.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adjacency[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Irreducibility via strong connectivity of the positive-entry digraph,
/// aperiodicity via the gcd of BFS level differences along every edge.
pub fn verify_ergodic(chain: &ChainModel) -> ErgodicityReport {
    let tol = Tolerances::default().entry;
    let n = chain.n_states();
    let p = chain.transition();
    let mut forward = vec![Vec::new(); n];
    let mut backward = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > tol {
                forward[i].push(j);
                backward[j].push(i);
            }
        }
    }
    let levels = reachable(&forward, 0);
    let irreducible =
        levels.iter().all(Option::is_some) && reachable(&backward, 0).iter().all(Option::is_some);
    if !irreducible {
        return ErgodicityReport {
            irreducible,
            period: 0,
        };
    }
    let mut period = 0;
    for (u, succ) in forward.iter().enumerate() {
        let lu = levels[u].unwrap();
        for &v in succ {
            let lv = levels[v].unwrap();
            period = gcd(period, (lu + 1).abs_diff(lv));
        }
    }
    ErgodicityReport {
        irreducible,
        period,
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn stationary_distribution_tol(chain: &ChainModel, tol: &Tolerances) -> Result<DVector<f64>> {
    let n = chain.n_states();
    let p = chain.transition();
    // (I - P)^T pi = 0 with the last equation swapped for sum(pi) = 1.
    let mut system = (DMatrix::identity(n, n) - p).transpose();
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = system.lu().solve(&rhs).ok_or(Error::SingularSystem {
        residual: f64::INFINITY,
    })?;
    let residual = inf_norm(&(p.transpose() * &pi - &pi));
    if !residual.is_finite() || residual > tol.residual {
        return Err(Error::SingularSystem { residual });
    }
    if pi.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidChain(
            "stationary distribution has non-positive mass; chain is not ergodic".into(),
        ));
    }
    Ok(pi)
}

/// Stationary distribution of an ergodic chain.
pub fn stationary_distribution(chain: &ChainModel) -> Result<DVector<f64>> {
    stationary_distribution_tol(chain, &Tolerances::default())
}

/// Long-run average reward `pi . r`.
pub fn average_reward(pi: &DVector<f64>, reward: &DVector<f64>) -> Result<f64> {
    if pi.len() != reward.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            found: reward.len(),
        });
    }
    Ok(pi.dot(reward))
}

pub(crate) fn differential_value_tol(
    chain: &ChainModel,
    pi: &DVector<f64>,
    omega: f64,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let n = chain.n_states();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    let p = chain.transition();
    let centered = chain.reward().add_scalar(-omega);
    // I - P + e pi^T is nonsingular for an ergodic chain, and any solution
    // satisfies pi^T v = pi^T (r - omega e) = 0.
    let system = DMatrix::identity(n, n) - p + DMatrix::from_element(n, 1, 1.0) * pi.transpose();
    let v = system.lu().solve(&centered).ok_or(Error::SingularSystem {
        residual: f64::INFINITY,
    })?;
    let residual = inf_norm(&(&v - p * &v - &centered)).max(pi.dot(&v).abs());
    if !residual.is_finite() || residual > tol.residual {
        return Err(Error::SingularSystem { residual });
    }
    Ok(v)
}

/// Basic differential value: `(I - P) v = r - omega e` with `pi . v = 0`.
pub fn differential_value(chain: &ChainModel, pi: &DVector<f64>, omega: f64) -> Result<DVector<f64>> {
    differential_value_tol(chain, pi, omega, &Tolerances::default())
}

/// Minimum-norm least-squares solution of `features * w = target`.
pub fn solve_weights(features: &FeatureMatrix, target: &DVector<f64>) -> Result<DVector<f64>> {
    let phi = features.matrix();
    if phi.nrows() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.nrows(),
            found: target.len(),
        });
    }
    let d = phi.ncols();
    let svd = phi.clone().svd(true, true);
    let rank = numerical_rank(svd.singular_values.as_slice(), phi.nrows().max(d));
    if rank < d {
        return Err(Error::RankDeficient { rank, expected: d });
    }
    let eps = svd.singular_values.max() * f64::EPSILON * phi.nrows().max(d) as f64;
    svd.solve(target, eps)
        .map_err(|_| Error::RankDeficient { rank, expected: d })
}

pub(crate) fn numerical_rank(singular_values: &[f64], dim: usize) -> usize {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = max * f64::EPSILON * dim as f64;
    singular_values.iter().filter(|&&s| s > cutoff).count()
}

/// Orthogonal projector onto the complement of `theta_e`.
pub fn projector_onto_o(theta_e: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm2 = theta_e.norm_squared();
    if norm2.sqrt() <= 1e-12 {
        return Err(Error::ZeroDirection);
    }
    let d = theta_e.len();
    Ok(DMatrix::identity(d, d) - theta_e * theta_e.transpose() / norm2)
}

/// The lambda-weighted multi-step transition matrix, the margin of the
/// mean TD dynamics on the identifiable subspace, and the threshold on the
/// step-size ratio above which the mean dynamics are negative definite.
#[derive(Clone, Debug)]
pub struct StabilityMargin {
    pub p_lambda: DMatrix<f64>,
    pub weighting: DMatrix<f64>,
    pub delta: f64,
    pub calpha_min: f64,
}

/// `(1 - lambda) P (I - lambda P)^{-1}`, the closed form of
/// `(1 - lambda) sum_m lambda^m P^{m+1}`.
pub fn lambda_transition(p: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    let resolvent = (DMatrix::identity(n, n) - p * lambda)
        .try_inverse()
        .ok_or(Error::SingularSystem {
            residual: f64::INFINITY,
        })?;
    Ok(p * resolvent * (1.0 - lambda))
}

/// Threshold on `c_alpha` for a given margin; the square root is taken of
/// the positive part.
pub fn calpha_threshold(delta: f64, lambda: f64) -> f64 {
    let gap = 1.0 - lambda;
    let radicand = 1.0 / (delta * delta * gap.powi(4)) - 1.0 / (gap * gap);
    delta + radicand.max(0.0).sqrt()
}

/// Orthonormal basis (columns) of the range of a symmetric projector.
pub fn projector_range_basis(projector: &DMatrix<f64>) -> DMatrix<f64> {
    let eigen = SymmetricEigen::new(projector.clone());
    let columns: Vec<_> = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &ev)| ev > 0.5)
        .map(|(i, _)| eigen.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&columns)
}

/// The quadratic-form matrix `Phi^T M (I - P^(lambda)) Phi`.
pub fn mean_dynamics_matrix(
    chain: &ChainModel,
    pi: &DVector<f64>,
    features: &FeatureMatrix,
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = chain.n_states();
    let phi = features.matrix();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    if phi.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: phi.nrows(),
        });
    }
    let p_lambda = lambda_transition(chain.transition(), lambda)?;
    let weighting = DMatrix::from_diagonal(pi);
    let form = phi.transpose() * &weighting * (DMatrix::identity(n, n) - &p_lambda) * phi;
    Ok((form, p_lambda, weighting))
}

/// Smallest value of the mean-dynamics quadratic form over unit vectors
/// orthogonal to `theta_e`.
pub fn stability_margin(
    chain: &ChainModel,
    pi: &DVector<f64>,
    features: &FeatureMatrix,
    projector: &DMatrix<f64>,
    lambda: f64,
) -> Result<StabilityMargin> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Config(vec![format!("lambda = {lambda} outside [0, 1)")]));
    }
    let (form, p_lambda, weighting) = mean_dynamics_matrix(chain, pi, features, lambda)?;
    let symmetric = (&form + form.transpose()) * 0.5;
    let basis = projector_range_basis(projector);
    let restricted = basis.transpose() * symmetric * &basis;
    let delta = SymmetricEigen::new(restricted).eigenvalues.min();
    if !(delta > 0.0) {
        return Err(Error::NonPositiveMargin(delta));
    }
    Ok(StabilityMargin {
        p_lambda,
        weighting,
        delta,
        calpha_min: calpha_threshold(delta, lambda),
    })
}

/// Stationary law, average reward and differential value of a chain; these
/// do not depend on the feature map.
#[derive(Clone, Debug)]
pub struct ChainSolution {
    pub pi: DVector<f64>,
    pub omega: f64,
    pub v: DVector<f64>,
}

impl ChainSolution {
    pub fn solve(chain: &ChainModel) -> Result<Self> {
        Self::solve_with(chain, &Tolerances::default())
    }

    pub fn solve_with(chain: &ChainModel, tol: &Tolerances) -> Result<Self> {
        let pi = stationary_distribution_tol(chain, tol)?;
        let omega = average_reward(&pi, chain.reward())?;
        let v = differential_value_tol(chain, &pi, omega, tol)?;
        Ok(ChainSolution { pi, omega, v })
    }
}

/// Every reference quantity the evaluation loss and the theory need.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub pi: DVector<f64>,
    pub omega: f64,
    pub v: DVector<f64>,
    pub theta_star: DVector<f64>,
    pub theta_e: DVector<f64>,
    pub projector: DMatrix<f64>,
    pub delta: f64,
    pub calpha_min: f64,
}

impl OracleSolution {
    pub fn compute(
        chain: &ChainModel,
        solution: &ChainSolution,
        features: &FeatureMatrix,
        lambda: f64,
    ) -> Result<Self> {
        Self::compute_with(chain, solution, features, lambda, &Tolerances::default())
    }

    pub fn compute_with(
        chain: &ChainModel,
        solution: &ChainSolution,
        features: &FeatureMatrix,
        lambda: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let theta_star = solve_weights(features, &solution.v)?;
        let ones = DVector::from_element(chain.n_states(), 1.0);
        let theta_e = solve_weights(features, &ones)?;
        for (w, target) in [(&theta_star, &solution.v), (&theta_e, &ones)] {
            let residual = inf_norm(&(features.matrix() * w - target));
            if residual > tol.residual {
                return Err(Error::SingularSystem { residual });
            }
        }
        let projector = projector_onto_o(&theta_e)?;
        let margin = stability_margin(chain, &solution.pi, features, &projector, lambda)?;
        Ok(OracleSolution {
            pi: solution.pi.clone(),
            omega: solution.omega,
            v: solution.v.clone(),
            theta_star,
            theta_e,
            projector,
            delta: margin.delta,
            calpha_min: margin.calpha_min,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }
}
