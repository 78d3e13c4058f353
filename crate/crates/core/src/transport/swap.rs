//! Greedy pairwise swapping refinement of an assignment.

use super::{check_pair, hilbert_distance, DistanceResult, Method};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metric::GroundMetric;

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// A swap must lower the summed cost by more than this to be taken.
pub const SWAP_IMPROVEMENT_TOL: f64 = 1e-12;

/// Swapping distance initialised from the Hilbert-sort assignment.
pub fn swapping_distance(
    x: &PointCloud,
    y: &PointCloud,
    m: &GroundMetric,
    max_sweeps: usize,
) -> Result<DistanceResult> {
    let init = hilbert_distance(x, y, m)?;
    let sigma = init.assignment.expect("hilbert returns an assignment").as_slice().to_vec();
    swapping_from(x, y, m, sigma, max_sweeps)
}

/// Runs sweeps over all pairs `i < j`, exchanging `σ(i)` and `σ(j)` whenever
/// that lowers the cost, until a sweep makes no change or `max_sweeps` is hit.
/// `iterations` reports the number of sweeps performed.
pub fn swapping_from(
    x: &PointCloud,
    y: &PointCloud,
    m: &GroundMetric,
    mut sigma: Vec<usize>,
    max_sweeps: usize,
) -> Result<DistanceResult> {
    check_pair(x, y, m, true)?;
    if max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
    }
    if sigma.len() != x.len() {
        return Err(Error::SizeMismatch(sigma.len(), x.len()));
    }
    let n = x.len();
    let mut cur: Vec<f64> = (0..n).map(|i| m.cost(x.row(i), y.row(sigma[i]))).collect();
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut swapped = false;
        for i in 0..n {
            let xi = x.row(i);
            for j in i + 1..n {
                let xj = x.row(j);
                let a = m.cost(xi, y.row(sigma[j]));
                let b = m.cost(xj, y.row(sigma[i]));
                if cur[i] + cur[j] - (a + b) > SWAP_IMPROVEMENT_TOL {
                    sigma.swap(i, j);
                    cur[i] = a;
                    cur[j] = b;
                    swapped = true;
                }
            }
        }
        if !swapped {
            break;
        }
    }
    Ok(DistanceResult::from_assignment(x, y, m, sigma, Method::Swapping, sweeps))
}
