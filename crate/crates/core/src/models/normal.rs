use rand_distr::{Distribution, StandardNormal};

use super::{check_len, check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::gaussian::MvNormal;
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;

pub const NORMAL_LOCATION_COV: [[f64; 2]; 2] = [[1.0, 0.5], [0.5, 1.0]];
pub const NORMAL_LOCATION_PRIOR_VAR: f64 = 25.0;

/// Bivariate Normal with unknown mean and known covariance.
#[derive(Debug, Clone)]
pub struct NormalLocation {
    prior: ProductPrior,
    space: ParamSpace,
}

impl NormalLocation {
    pub fn new() -> Self {
        let sd = NORMAL_LOCATION_PRIOR_VAR.sqrt();
        let prior = ProductPrior::new(vec![Prior1d::Normal { mean: 0.0, sd }; 2]);
        let space = prior.space(&["theta1", "theta2"]);
        Self { prior, space }
    }

    /// Conjugate posterior given `data`.
    pub fn posterior(&self, data: &PointCloud) -> Result<MvNormal> {
        check_len(data, 2)?;
        if data.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let n = data.len() as f64;
        let [[a, b], [_, d]] = NORMAL_LOCATION_COV;
        let det = a * d - b * b;
        let inv = [[d / det, -b / det], [-b / det, a / det]];
        let p0 = 1.0 / NORMAL_LOCATION_PRIOR_VAR;
        let prec = [
            [p0 + n * inv[0][0], n * inv[0][1]],
            [n * inv[1][0], p0 + n * inv[1][1]],
        ];
        let pdet = prec[0][0] * prec[1][1] - prec[0][1] * prec[1][0];
        let cov = vec![
            vec![prec[1][1] / pdet, -prec[0][1] / pdet],
            vec![-prec[1][0] / pdet, prec[0][0] / pdet],
        ];
        let ybar = data.mean();
        let rhs = [
            n * (inv[0][0] * ybar[0] + inv[0][1] * ybar[1]),
            n * (inv[1][0] * ybar[0] + inv[1][1] * ybar[1]),
        ];
        let mean = vec![
            cov[0][0] * rhs[0] + cov[0][1] * rhs[1],
            cov[1][0] * rhs[0] + cov[1][1] * rhs[1],
        ];
        MvNormal::new(mean, cov)
    }
}

impl Default for NormalLocation {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for NormalLocation {
    fn name(&self) -> &'static str {
        "normal"
    }

    fn prior(&self) -> &ProductPrior {
        &self.prior
    }

    fn param_space(&self) -> &ParamSpace {
        &self.space
    }

    fn output(&self) -> OutputKind {
        OutputKind::Iid
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud> {
        check_theta(self, theta)?;
        let c = NORMAL_LOCATION_COV[0][1];
        let s = (1.0 - c * c).sqrt();
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            data.push(theta[0] + z1);
            data.push(theta[1] + c * z1 + s * z2);
        }
        Ok(PointCloud::from_raw(data, 2))
    }

    fn has_loglik(&self) -> bool {
        true
    }

    fn loglik(&self, theta: &[f64], data: &PointCloud) -> Result<f64> {
        check_theta(self, theta)?;
        check_len(data, 2)?;
        let g = MvNormal::new(
            theta.to_vec(),
            NORMAL_LOCATION_COV.iter().map(|r| r.to_vec()).collect(),
        )?;
        Ok(data.rows().map(|r| g.logpdf(r)).sum())
    }
}
