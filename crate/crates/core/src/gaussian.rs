//! Multivariate Normal distributions.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct MvNormal {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    /// Lower Cholesky factor of `cov`.
    chol: DMatrix<f64>,
    log_det: f64,
}

impl MvNormal {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(d, cov.len()));
        }
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        Self::from_matrix(DVector::from_vec(mean), m)
    }

    pub fn from_matrix(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite Gaussian parameters".into()));
        }
        let sym = (&cov + cov.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("covariance is not positive definite".into()))?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            cov: sym,
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        (&self.mean + &self.chol * z).iter().copied().collect()
    }

    pub fn sample_cloud(&self, n: usize, rng: &mut RandomStream) -> PointCloud {
        let mut data = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            data.extend(self.sample(rng));
        }
        PointCloud::from_raw(data, self.dim())
    }

    pub fn logpdf(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        let sol = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det + sol.norm_squared())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logpdf_matches_closed_form_2d() {
        let g = MvNormal::new(vec![1.0, -1.0], vec![vec![2.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let (x, y) = (0.3, 0.4);
        let det: f64 = 2.0 - 0.36;
        let (dx, dy) = (x - 1.0, y + 1.0);
        let q = (1.0 * dx * dx - 2.0 * 0.6 * dx * dy + 2.0 * dy * dy) / det;
        let want = -0.5 * q - 0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln();
        assert!((g.logpdf(&[x, y]) - want).abs() < 1e-12);
    }

    #[test]
    fn sample_moments() {
        let g = MvNormal::new(vec![1.0, -1.0], vec![vec![2.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let mut rng = RandomStream::new(3, &[0]);
        let c = g.sample_cloud(100_000, &mut rng);
        let m = c.mean();
        let s = c.covariance();
        assert!((m[0] - 1.0).abs() < 0.03 && (m[1] + 1.0).abs() < 0.02);
        assert!((s[0][0] - 2.0).abs() < 0.05 && (s[0][1] - 0.6).abs() < 0.03);
    }

    #[test]
    fn rejects_singular() {
        assert!(MvNormal::new(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
    }
}
