use std::cmp::Ordering;

use super::{check_pair, cost_matrix, solve_assignment, DistanceResult, Method};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metric::{root_p, GroundMetric};

/// Largest size accepted by [`brute_force_wasserstein`] (9! ≈ 3.6·10⁵ permutations).
pub const MAX_BRUTE_FORCE_N: usize = 9;

/// Indices sorting a scalar sample, ties broken by original position.
pub(crate) fn argsort_values(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    idx
}

/// Wasserstein distance between two scalar samples by matching order statistics.
pub fn wasserstein_1d(x: &PointCloud, y: &PointCloud, p: f64) -> Result<DistanceResult> {
    if x.dim() != 1 || y.dim() != 1 {
        return Err(Error::DimensionMismatch(x.dim().max(y.dim()), 1));
    }
    if x.len() != y.len() {
        return Err(Error::SizeMismatch(x.len(), y.len()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("order p must be >= 1, got {p}")));
    }
    let ox = argsort_values(x.as_slice());
    let oy = argsort_values(y.as_slice());
    let mut sigma = vec![0usize; x.len()];
    for (&i, &j) in ox.iter().zip(&oy) {
        sigma[i] = j;
    }
    let m = GroundMetric::l1(p);
    Ok(DistanceResult::from_assignment(x, y, &m, sigma, Method::Wasserstein1d, 0))
}

/// Exact `W_p` between equal-size clouds via the linear sum assignment problem.
pub fn exact_wasserstein(x: &PointCloud, y: &PointCloud, m: &GroundMetric) -> Result<DistanceResult> {
    check_pair(x, y, m, true)?;
    let n = x.len();
    let cost = cost_matrix(x, y, m);
    let sigma = solve_assignment(&cost, n)?;
    let total: f64 = sigma.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(DistanceResult {
        value: root_p(total / n as f64, m.p()),
        method: Method::Exact,
        iterations: n,
        assignment: Some(super::Assignment(sigma)),
    })
}

/// Exhaustive minimum over all permutations (Heap's algorithm). Test oracle.
pub fn brute_force_wasserstein(
    x: &PointCloud,
    y: &PointCloud,
    m: &GroundMetric,
) -> Result<DistanceResult> {
    check_pair(x, y, m, true)?;
    let n = x.len();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::InvalidArgument(format!(
            "brute force limited to n <= {MAX_BRUTE_FORCE_N}, got {n}"
        )));
    }
    let cost = cost_matrix(x, y, m);
    let eval = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum() };

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = eval(&perm);
    let mut best_perm = perm.clone();
    let mut c = vec![0usize; n];
    let mut count = 1usize;
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = eval(&perm);
            count += 1;
            if v.partial_cmp(&best) == Some(Ordering::Less) {
                best = v;
                best_perm.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(DistanceResult {
        value: root_p(best / n as f64, m.p()),
        method: Method::BruteForce,
        iterations: count,
        assignment: Some(super::Assignment(best_perm)),
    })
}
