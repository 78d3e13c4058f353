use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_len, check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;

const SKEW_C: f64 = 0.8;
const R_EDGE: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-10;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Quantile as a function of the Normal score `z`.
#[inline]
fn q_of_z(z: f64, a: f64, b: f64, g: f64, k: f64) -> f64 {
    a + b * (1.0 + SKEW_C * (0.5 * g * z).tanh()) * (1.0 + z * z).powf(k) * z
}

/// dQ/dz.
#[inline]
fn dq_dz(z: f64, b: f64, g: f64, k: f64) -> f64 {
    let t = (0.5 * g * z).tanh();
    let sech2 = 1.0 - t * t;
    let zz = 1.0 + z * z;
    b * zz.powf(k) * (SKEW_C * 0.5 * g * sech2 * z + (1.0 + SKEW_C * t) * (1.0 + 2.0 * k * z * z / zz))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard Normal")
}

fn unpack(theta: &[f64]) -> Result<(f64, f64, f64, f64)> {
    match *theta {
        [a, b, g, k] => Ok((a, b, g, k)),
        _ => Err(Error::InvalidArgument(format!(
            "g-and-k needs θ = (a, b, g, k), got {} values",
            theta.len()
        ))),
    }
}

/// g-and-k quantile at level `r`.
pub fn gandk_quantile(r: f64, theta: &[f64]) -> Result<f64> {
    let (a, b, g, k) = unpack(theta)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level {r} outside (0, 1)")));
    }
    Ok(q_of_z(std_normal().inverse_cdf(r), a, b, g, k))
}

/// Log-density at `y`, by inverting the quantile function and
/// differentiating it. Values outside the central `1 − 2e-12` mass get `−∞`.
pub fn gandk_logpdf(y: f64, theta: &[f64]) -> Result<f64> {
    let (a, b, g, k) = unpack(theta)?;
    let nd = std_normal();
    let (mut lo, mut hi) = (nd.inverse_cdf(R_EDGE), nd.inverse_cdf(1.0 - R_EDGE));
    let (qlo, qhi) = (q_of_z(lo, a, b, g, k), q_of_z(hi, a, b, g, k));
    if !(y >= qlo && y <= qhi) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut z = 0.5 * (lo + hi);
    let mut resid = f64::INFINITY;
    for _ in 0..200 {
        z = 0.5 * (lo + hi);
        let q = q_of_z(z, a, b, g, k);
        resid = q - y;
        if resid.abs() <= ROOT_TOL || hi - lo <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
            break;
        }
        if resid < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
    }
    if resid.abs() > ROOT_TOL && resid.abs() > 1e-8 * y.abs().max(1.0) {
        return Err(Error::NotConverged {
            method: "gandk quantile inversion",
            iterations: 200,
            residual: resid.abs(),
        });
    }
    Ok(-0.5 * z * z - LN_SQRT_2PI - dq_dz(z, b, g, k).ln())
}

/// Univariate g-and-k with a uniform prior on `[0, 10]^4`.
#[derive(Debug, Clone)]
pub struct Gandk {
    prior: ProductPrior,
    space: ParamSpace,
}

impl Gandk {
    pub fn new() -> Self {
        let prior = ProductPrior::new(vec![Prior1d::Uniform { lo: 0.0, hi: 10.0 }; 4]);
        let space = prior.space(&["a", "b", "g", "k"]);
        Self { prior, space }
    }
}

impl Default for Gandk {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for Gandk {
    fn name(&self) -> &'static str {
        "gandk"
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
        1
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud> {
        check_theta(self, theta)?;
        let (a, b, g, k) = unpack(theta)?;
        let data = (0..n)
            .map(|_| q_of_z(StandardNormal.sample(rng), a, b, g, k))
            .collect();
        Ok(PointCloud::from_raw(data, 1))
    }

    fn has_loglik(&self) -> bool {
        true
    }

    fn loglik(&self, theta: &[f64], data: &PointCloud) -> Result<f64> {
        check_theta(self, theta)?;
        check_len(data, 1)?;
        let mut total = 0.0;
        for &y in data.as_slice() {
            total += gandk_logpdf(y, theta)?;
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        Ok(total)
    }
}

/// Bivariate g-and-k: correlated Normal scores pushed through two marginal
/// quantile functions. Prior uniform on `[0, 10]^8 × [−1, 1]`.
#[derive(Debug, Clone)]
pub struct BivariateGandk {
    prior: ProductPrior,
    space: ParamSpace,
}

impl BivariateGandk {
    pub fn new() -> Self {
        let mut f = vec![Prior1d::Uniform { lo: 0.0, hi: 10.0 }; 8];
        f.push(Prior1d::Uniform { lo: -1.0, hi: 1.0 });
        let prior = ProductPrior::new(f);
        let space = prior.space(&["a1", "b1", "g1", "k1", "a2", "b2", "g2", "k2", "rho"]);
        Self { prior, space }
    }
}

impl Default for BivariateGandk {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for BivariateGandk {
    fn name(&self) -> &'static str {
        "bigandk"
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
        let rho = theta[8];
        if rho.abs() >= 1.0 {
            return Err(Error::OutOfSupport(format!("rho = {rho} needs |rho| < 1")));
        }
        let s = (1.0 - rho * rho).sqrt();
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let z1: f64 = StandardNormal.sample(rng);
            let e: f64 = StandardNormal.sample(rng);
            let z2 = rho * z1 + s * e;
            data.push(q_of_z(z1, theta[0], theta[1], theta[2], theta[3]));
            data.push(q_of_z(z2, theta[4], theta[5], theta[6], theta[7]));
        }
        Ok(PointCloud::from_raw(data, 2))
    }
}
