//! Gaussian-kernel maximum mean discrepancy.

use super::sinkhorn::median;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kernel_sum(x: &PointCloud, y: &PointCloud, inv_two_h2: f64) -> f64 {
    let mut s = 0.0;
    for a in x.rows() {
        for b in y.rows() {
            s += (-sq_dist(a, b) * inv_two_h2).exp();
        }
    }
    s
}

/// Self-similarity term `n⁻² Σ_ij k(x_i, x_j)`, cacheable for a fixed cloud.
pub(crate) fn self_term(x: &PointCloud, bandwidth: f64) -> f64 {
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let n = x.len();
    let mut s = n as f64;
    for i in 0..n {
        for j in i + 1..n {
            s += 2.0 * (-sq_dist(x.row(i), x.row(j)) * inv).exp();
        }
    }
    s / (n * n) as f64
}

/// Biased (V-statistic) estimate of MMD² with `k(a, b) = exp(−‖a − b‖² / 2h²)`.
pub fn mmd_squared(x: &PointCloud, y: &PointCloud, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    mmd_squared_with_self(x, self_term(x, bandwidth), y, bandwidth)
}

/// As [`mmd_squared`] with the `x` self-term precomputed by the caller.
pub fn mmd_squared_with_self(x: &PointCloud, x_self: f64, y: &PointCloud, bandwidth: f64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    let (n, m) = (x.len() as f64, y.len() as f64);
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let yy = self_term(y, bandwidth);
    let xy = kernel_sum(x, y, inv) / (n * m);
    Ok(x_self + yy - 2.0 * xy)
}

/// Median of pairwise L1 distances `‖x_i − x_j‖₁` over pairs `i < j`.
pub fn median_heuristic_bandwidth(x: &PointCloud) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument("bandwidth heuristic needs at least 2 points".into()));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b).abs()).sum::<f64>());
        }
    }
    let h = median(&mut d);
    if !(h > 0.0) {
        return Err(Error::Degenerate("median pairwise distance is zero".into()));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_clouds_give_zero() {
        let x = PointCloud::from_rows(&[[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]]).unwrap();
        assert!(mmd_squared(&x, &x, 1.3).unwrap().abs() < 1e-15);
    }

    #[test]
    fn singletons_by_hand() {
        let a = PointCloud::from_rows(&[[0.0, 0.0]]).unwrap();
        let b = PointCloud::from_rows(&[[1.0, 2.0]]).unwrap();
        let h = 0.7f64;
        let expected = 2.0 - 2.0 * (-5.0 / (2.0 * h * h)).exp();
        assert!((mmd_squared(&a, &b, h).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn wide_kernel_vanishes() {
        let x = PointCloud::from_values(&[0.0, 1.0, 5.0]).unwrap();
        let y = PointCloud::from_values(&[-3.0, 2.0]).unwrap();
        assert!(mmd_squared(&x, &y, 1e6).unwrap().abs() < 1e-10);
        assert!(mmd_squared(&x, &y, 0.0).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(median_heuristic_bandwidth(&PointCloud::from_values(&[0.0, 1.0]).unwrap()).unwrap(), 1.0);
        assert_eq!(median_heuristic_bandwidth(&PointCloud::from_values(&[0.0, 1.0, 2.0]).unwrap()).unwrap(), 1.0);
        assert!(matches!(
            median_heuristic_bandwidth(&PointCloud::from_values(&[4.0, 4.0, 4.0]).unwrap()),
            Err(Error::Degenerate(_))
        ));
        assert!(median_heuristic_bandwidth(&PointCloud::from_values(&[4.0]).unwrap()).is_err());
    }
}
