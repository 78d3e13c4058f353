use rand_distr::{Distribution, StandardNormal};

use super::{check_len, check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;
use crate::timeseries::Embedding;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn normal_logpdf(x: f64, sd: f64) -> f64 {
    let z = x / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Stationary AR(1) with θ = (φ, log σ).
#[derive(Debug, Clone)]
pub struct Ar1 {
    prior: ProductPrior,
    space: ParamSpace,
}

impl Ar1 {
    pub fn new() -> Self {
        let prior = ProductPrior::new(vec![
            Prior1d::Uniform { lo: -1.0, hi: 1.0 },
            Prior1d::Normal { mean: 0.0, sd: 1.0 },
        ]);
        let space = prior.space(&["phi", "log_sigma"]);
        Self { prior, space }
    }

    /// Variance of the stationary marginal, `σ² / (1 − φ²)`.
    pub fn stationary_variance(theta: &[f64]) -> f64 {
        (2.0 * theta[1]).exp() / (1.0 - theta[0] * theta[0])
    }

    fn stationary(theta: &[f64]) -> Result<(f64, f64)> {
        let phi = theta[0];
        if phi.abs() >= 1.0 {
            return Err(Error::OutOfSupport(format!("|phi| = {} must be < 1", phi.abs())));
        }
        Ok((phi, theta[1].exp()))
    }
}

impl Default for Ar1 {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for Ar1 {
    fn name(&self) -> &'static str {
        "ar1"
    }

    fn prior(&self) -> &ProductPrior {
        &self.prior
    }

    fn param_space(&self) -> &ParamSpace {
        &self.space
    }

    fn output(&self) -> OutputKind {
        OutputKind::Series
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn default_embedding(&self) -> Embedding {
        Embedding::Delay {
            lags: vec![1],
            stride: 2,
        }
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud> {
        check_theta(self, theta)?;
        let (phi, sigma) = Self::stationary(theta)?;
        let mut y = Vec::with_capacity(n);
        if n > 0 {
            let z: f64 = StandardNormal.sample(rng);
            y.push(z * sigma / (1.0 - phi * phi).sqrt());
        }
        for t in 1..n {
            let z: f64 = StandardNormal.sample(rng);
            y.push(phi * y[t - 1] + sigma * z);
        }
        Ok(PointCloud::from_raw(y, 1))
    }

    fn has_loglik(&self) -> bool {
        true
    }

    fn loglik(&self, theta: &[f64], data: &PointCloud) -> Result<f64> {
        check_theta(self, theta)?;
        check_len(data, 1)?;
        let (phi, sigma) = Self::stationary(theta)?;
        let y = data.as_slice();
        let mut ll = normal_logpdf(y[0], sigma / (1.0 - phi * phi).sqrt());
        for w in y.windows(2) {
            ll += normal_logpdf(w[1] - phi * w[0], sigma);
        }
        Ok(ll)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn phi_zero_is_iid_normal() {
        let m = Ar1::new();
        let th = [0.0, 0.3];
        let y = m.simulate(&th, 8, &mut RandomStream::new(1, &[0])).unwrap();
        let sd = 0.3f64.exp();
        let want: f64 = y.as_slice().iter().map(|&v| normal_logpdf(v, sd)).sum();
        assert!((m.loglik(&th, &y).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn stationary_variance() {
        let m = Ar1::new();
        let th = [0.7, 0.9];
        let v = Ar1::stationary_variance(&th);
        assert!((v - 1.8f64.exp() / 0.51).abs() < 1e-12);
        assert!((v - 11.86).abs() < 0.01);
        let y = m.simulate(&th, 100_000, &mut RandomStream::new(2, &[0])).unwrap();
        let s = y.covariance()[0][0];
        assert!((s / v - 1.0).abs() < 0.05, "{s} vs {v}");
    }

    #[test]
    fn loglik_matches_dense_gaussian() {
        let m = Ar1::new();
        for (seed, th) in [(3, [0.7, 0.9]), (4, [-0.4, -0.2]), (5, [0.95, 0.0])] {
            for n in 1..=8 {
                let y = m.simulate(&th, n, &mut RandomStream::new(seed, &[n as u64])).unwrap();
                let (phi, sigma) = (th[0], th[1].exp());
                let v = sigma * sigma / (1.0 - phi * phi);
                let cov = DMatrix::from_fn(n, n, |i, j| v * phi.powi((i as i32 - j as i32).abs()));
                let chol = cov.clone().cholesky().unwrap();
                let x = nalgebra::DVector::from_column_slice(y.as_slice());
                let quad = x.dot(&chol.solve(&x));
                let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let want = -0.5 * (quad + logdet) - n as f64 * LN_SQRT_2PI;
                assert!((m.loglik(&th, &y).unwrap() - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn loglik_peaks_at_truth() {
        let m = Ar1::new();
        let th = [0.7, 0.9];
        let y = m.simulate(&th, 5000, &mut RandomStream::new(6, &[0])).unwrap();
        let best = m.loglik(&th, &y).unwrap();
        for (dp, ds) in [(-0.1, 0.0), (0.1, 0.0), (0.0, -0.1), (0.0, 0.1)] {
            assert!(m.loglik(&[0.7 + dp, 0.9 + ds], &y).unwrap() < best);
        }
    }

    #[test]
    fn unit_root_rejected() {
        let m = Ar1::new();
        assert!(m.simulate(&[1.0, 0.0], 5, &mut RandomStream::new(1, &[0])).is_err());
    }
}
