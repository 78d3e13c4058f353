use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;

pub const DEFAULT_TOGGLE_HORIZON: usize = 300;
const MAX_REJECTIONS: usize = 100;
const INNOVATION_SCALE: f64 = 0.5;
const START: f64 = 10.0;

/// Draw from N(mean, sd²) conditioned on being ≥ 0 by rejection; after
/// `MAX_REJECTIONS` failures the value is clamped to 0.
fn nonneg_normal(mean: f64, sd: f64, rng: &mut RandomStream) -> f64 {
    if sd == 0.0 {
        return mean.max(0.0);
    }
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        let x = mean + sd * z;
        if x >= 0.0 {
            return x;
        }
    }
    0.0
}

/// Exact draw from N(mean, sd²) conditioned on being > 0, by inversion.
fn positive_normal_by_inversion(mean: f64, sd: f64, rng: &mut RandomStream) -> f64 {
    let nd = Normal::new(0.0, 1.0).expect("standard Normal");
    let lo = nd.cdf(-mean / sd);
    let u: f64 = rng.random();
    let p = lo + u * (1.0 - lo);
    let x = mean + sd * nd.inverse_cdf(p.min(1.0 - f64::EPSILON));
    if x > 0.0 {
        x
    } else {
        f64::MIN_POSITIVE
    }
}

/// Two-gene toggle switch observed through the terminal level of the first
/// gene, one independent cell per observation.
#[derive(Debug, Clone)]
pub struct ToggleSwitch {
    horizon: usize,
    prior: ProductPrior,
    space: ParamSpace,
}

impl ToggleSwitch {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("toggle switch horizon must be >= 1".into()));
        }
        let u = |lo, hi| Prior1d::Uniform { lo, hi };
        let prior = ProductPrior::new(vec![
            u(0.0, 50.0),
            u(0.0, 50.0),
            u(0.0, 5.0),
            u(0.0, 5.0),
            u(250.0, 450.0),
            u(0.0, 0.5),
            u(0.0, 0.4),
        ]);
        let space = prior.space(&["alpha1", "alpha2", "beta1", "beta2", "mu", "sigma", "gamma"]);
        Ok(Self {
            horizon,
            prior,
            space,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Terminal state `(u_T, v_T)` of one cell. `noise` scales the innovations.
    pub fn trajectory(&self, theta: &[f64], noise: f64, rng: &mut RandomStream) -> (f64, f64) {
        let (a1, a2, b1, b2) = (theta[0], theta[1], theta[2], theta[3]);
        let sd = INNOVATION_SCALE * noise;
        let (mut u, mut v) = (START, START);
        for t in 0..self.horizon {
            let mu_u = u + a1 / (1.0 + v.powf(b1)) - (1.0 + 0.03 * u);
            let mu_v = v + a2 / (1.0 + u.powf(b2)) - (1.0 + 0.03 * v);
            let mut nu = nonneg_normal(mu_u, sd, rng);
            if nu == 0.0 && t + 1 == self.horizon && sd > 0.0 && theta[6] > 0.0 {
                // the observation variance is singular at u_T = 0
                nu = positive_normal_by_inversion(mu_u, sd, rng);
            }
            v = nonneg_normal(mu_v, sd, rng);
            u = nu;
        }
        (u, v)
    }

    fn observe(&self, theta: &[f64], u: f64, rng: &mut RandomStream) -> f64 {
        let (mu, sigma, gamma) = (theta[4], theta[5], theta[6]);
        let sd = if gamma == 0.0 {
            mu * sigma
        } else {
            mu * sigma / u.powf(gamma)
        };
        nonneg_normal(mu + u, sd, rng)
    }
}

impl GenerativeModel for ToggleSwitch {
    fn name(&self) -> &'static str {
        "toggleswitch"
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
        let data = (0..n)
            .map(|_| {
                let (u, _) = self.trajectory(theta, 1.0, rng);
                self.observe(theta, u, rng)
            })
            .collect();
        Ok(PointCloud::from_raw(data, 1))
    }
}
