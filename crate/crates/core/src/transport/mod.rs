//! Distances between empirical distributions.
//!
//! | Function | Coupling | Cost |
//! |----------|----------|------|
//! | [`wasserstein_1d`] | sorted order statistics | O(n log n) |
//! | [`exact_wasserstein`] | optimal assignment | O(n³) |
//! | [`brute_force_wasserstein`] | enumeration of all n! permutations | O(n!·n) |
//! | [`hilbert_distance`] | Hilbert-curve sort of both clouds | O(n log n) |
//! | [`swapping_distance`] | greedy pairwise swaps from the Hilbert coupling | O(n²) per sweep |
//! | [`sinkhorn_divergence`] | entropically regularised plan | O(nm) per iteration |
//! | [`mmd_squared`] | none (kernel two-sample statistic) | O((n+m)²) |
//!
//! Apart from Sinkhorn and MMD, every `value` is on the distance scale:
//! `value^p` is the transport cost of the returned assignment.

mod assignment;
mod exact;
mod hilbert;
mod mmd;
mod sinkhorn;
mod swap;

pub use assignment::solve as solve_assignment;
pub use exact::{brute_force_wasserstein, exact_wasserstein, wasserstein_1d, MAX_BRUTE_FORCE_N};
pub use hilbert::{
    hilbert_distance, hilbert_distance_in_box, hilbert_index, hilbert_order, BoundingBox,
    DEFAULT_HILBERT_BITS,
};
pub use mmd::{median_heuristic_bandwidth, mmd_squared, mmd_squared_with_self};
pub(crate) use mmd::self_term as mmd_self_term;
pub use sinkhorn::{sinkhorn_divergence, sinkhorn_rounded, SinkhornOptions, SinkhornOutput};
pub use swap::{swapping_distance, swapping_from, DEFAULT_MAX_SWEEPS, SWAP_IMPROVEMENT_TOL};

use rand::seq::index;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metric::{root_p, GroundMetric};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Wasserstein1d,
    Exact,
    BruteForce,
    Hilbert,
    Swapping,
    Sinkhorn,
    Mmd,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Wasserstein1d => "wasserstein_1d",
            Method::Exact => "wasserstein",
            Method::BruteForce => "brute_force",
            Method::Hilbert => "hilbert",
            Method::Swapping => "swap",
            Method::Sinkhorn => "sinkhorn",
            Method::Mmd => "mmd",
        }
    }
}

/// A permutation `σ` matching row `i` of the first cloud to row `σ(i)` of the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; sigma.len()];
        for &j in &sigma {
            if j >= sigma.len() || seen[j] {
                return Err(Error::InvalidArgument("assignment is not a permutation".into()));
            }
            seen[j] = true;
        }
        Ok(Self(sigma))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `n⁻¹ Σ ρ(x_i, y_σ(i))^p`.
    pub fn cost(&self, x: &PointCloud, y: &PointCloud, m: &GroundMetric) -> f64 {
        let s: f64 = self
            .0
            .iter()
            .enumerate()
            .map(|(i, &j)| m.cost(x.row(i), y.row(j)))
            .sum();
        s / self.0.len() as f64
    }
}

/// Coupling matrix between clouds of sizes `n` and `m`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    gamma: Vec<f64>,
    n: usize,
    m: usize,
}

impl TransportPlan {
    pub fn new(gamma: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if gamma.len() != n * m {
            return Err(Error::SizeMismatch(gamma.len(), n * m));
        }
        if gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument("plan entries must be finite and nonnegative".into()));
        }
        Ok(Self { gamma, n, m })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.chunks_exact(self.m).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.m];
        for r in self.gamma.chunks_exact(self.m) {
            for (s, g) in c.iter_mut().zip(r) {
                *s += g;
            }
        }
        c
    }

    /// Largest deviation of a row or column sum from its uniform target.
    pub fn marginal_violation(&self) -> f64 {
        let a = 1.0 / self.n as f64;
        let b = 1.0 / self.m as f64;
        let rv = self.row_sums().iter().map(|s| (s - a).abs()).fold(0.0, f64::max);
        let cv = self.col_sums().iter().map(|s| (s - b).abs()).fold(0.0, f64::max);
        rv.max(cv)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
    pub assignment: Option<Assignment>,
}

impl DistanceResult {
    pub(crate) fn from_assignment(
        x: &PointCloud,
        y: &PointCloud,
        m: &GroundMetric,
        sigma: Vec<usize>,
        method: Method,
        iterations: usize,
    ) -> Self {
        let a = Assignment(sigma);
        Self {
            value: root_p(a.cost(x, y, m), m.p()),
            method,
            iterations,
            assignment: Some(a),
        }
    }
}

pub(crate) fn check_pair(x: &PointCloud, y: &PointCloud, m: &GroundMetric, same_size: bool) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    if x.dim() < m.min_dim() {
        return Err(Error::DimensionMismatch(x.dim(), m.min_dim()));
    }
    if same_size && x.len() != y.len() {
        return Err(Error::SizeMismatch(x.len(), y.len()));
    }
    Ok(())
}

/// Row-major `n × m` matrix of `ρ(x_i, y_j)^p`.
pub fn cost_matrix(x: &PointCloud, y: &PointCloud, m: &GroundMetric) -> Vec<f64> {
    let mut c = Vec::with_capacity(x.len() * y.len());
    for a in x.rows() {
        for b in y.rows() {
            c.push(m.cost(a, b));
        }
    }
    c
}

/// `m` rows drawn without replacement, kept in their original order.
pub fn subsample(x: &PointCloud, m: usize, rng: &mut RandomStream) -> Result<PointCloud> {
    if m == 0 || m > x.len() {
        return Err(Error::InvalidArgument(format!(
            "subsample size {m} outside 1..={}",
            x.len()
        )));
    }
    if m == x.len() {
        return Ok(x.clone());
    }
    let mut idx = index::sample(rng, x.len(), m).into_vec();
    idx.sort_unstable();
    Ok(x.select(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(n: usize, seed: u64) -> PointCloud {
        use rand::Rng;
        let mut rng = RandomStream::new(seed, &[]);
        PointCloud::new((0..2 * n).map(|_| rng.random::<f64>()).collect(), 2).unwrap()
    }

    #[test]
    fn subsample_edge_cases() {
        let x = cloud(20, 1);
        let mut rng = RandomStream::new(1, &[7]);
        assert_eq!(subsample(&x, 20, &mut rng).unwrap(), x);
        let one = subsample(&x, 1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(x.rows().any(|r| r == one.row(0)));
        assert!(subsample(&x, 0, &mut rng).is_err());
        assert!(subsample(&x, 21, &mut rng).is_err());
    }

    #[test]
    fn subsample_is_deterministic_and_ordered() {
        let x = PointCloud::from_values(&(0..100).map(|v| v as f64).collect::<Vec<_>>()).unwrap();
        let a = subsample(&x, 30, &mut RandomStream::new(5, &[7])).unwrap();
        let b = subsample(&x, 30, &mut RandomStream::new(5, &[7])).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn assignment_validation() {
        assert!(Assignment::new(vec![1, 0, 2]).is_ok());
        assert!(Assignment::new(vec![1, 1, 2]).is_err());
        assert!(Assignment::new(vec![0, 3]).is_err());
    }
}
