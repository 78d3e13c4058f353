use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use super::{check_len, check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::Result;
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `y_t = A cos(2πωt + φ) + σ w_t` with θ = (ω, φ, log σ, log A).
#[derive(Debug, Clone)]
pub struct Cosine {
    prior: ProductPrior,
    space: ParamSpace,
}

impl Cosine {
    pub fn new() -> Self {
        let prior = ProductPrior::new(vec![
            Prior1d::Uniform { lo: 0.0, hi: 0.1 },
            Prior1d::Uniform {
                lo: 0.0,
                hi: 2.0 * PI,
            },
            Prior1d::Normal { mean: 0.0, sd: 1.0 },
            Prior1d::Normal { mean: 0.0, sd: 1.0 },
        ]);
        let space = prior.space(&["omega", "phi", "log_sigma", "log_a"]);
        Self { prior, space }
    }

    /// Noise-free signal at time `t` (1-based).
    pub fn signal(theta: &[f64], t: usize) -> f64 {
        theta[3].exp() * (2.0 * PI * theta[0] * t as f64 + theta[1]).cos()
    }

    /// Simulation with an explicit noise scale, allowing σ = 0.
    pub fn simulate_with_sigma(theta: &[f64], sigma: f64, n: usize, rng: &mut RandomStream) -> PointCloud {
        let y = (1..=n)
            .map(|t| {
                let z: f64 = StandardNormal.sample(rng);
                Self::signal(theta, t) + sigma * z
            })
            .collect();
        PointCloud::from_raw(y, 1)
    }
}

impl Default for Cosine {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for Cosine {
    fn name(&self) -> &'static str {
        "cosine"
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

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud> {
        check_theta(self, theta)?;
        Ok(Self::simulate_with_sigma(theta, theta[2].exp(), n, rng))
    }

    fn has_loglik(&self) -> bool {
        true
    }

    fn loglik(&self, theta: &[f64], data: &PointCloud) -> Result<f64> {
        check_theta(self, theta)?;
        check_len(data, 1)?;
        let log_sigma = theta[2];
        let sigma = log_sigma.exp();
        Ok(data
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let z = (y - Self::signal(theta, i + 1)) / sigma;
                -0.5 * z * z - log_sigma - LN_SQRT_2PI
            })
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: [f64; 4] = [1.0 / 80.0, PI / 4.0, 0.0, std::f64::consts::LN_2];

    #[test]
    fn noise_free_signal() {
        let y = Cosine::simulate_with_sigma(&THETA, 0.0, 100, &mut RandomStream::new(1, &[0]));
        for (i, &v) in y.as_slice().iter().enumerate() {
            let t = (i + 1) as f64;
            assert!((v - 2.0 * (2.0 * PI * t / 80.0 + PI / 4.0).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn loglik_grid_maximum_near_truth() {
        let m = Cosine::new();
        let y = m.simulate(&THETA, 100, &mut RandomStream::new(2, &[0])).unwrap();
        let mut best = (f64::NEG_INFINITY, [0.0; 4]);
        for i in 1..=40 {
            for j in 0..24 {
                for k in -4..=4 {
                    for l in -4..=4 {
                        let th = [
                            i as f64 * 0.0025,
                            j as f64 * 2.0 * PI / 24.0,
                            k as f64 * 0.25,
                            std::f64::consts::LN_2 + l as f64 * 0.25,
                        ];
                        let ll = m.loglik(&th, &y).unwrap();
                        if ll > best.0 {
                            best = (ll, th);
                        }
                    }
                }
            }
        }
        let th = best.1;
        assert!((th[0] - THETA[0]).abs() <= 0.0025 + 1e-12, "{th:?}");
        assert!((th[1] - THETA[1]).abs() <= 2.0 * PI / 24.0 + 1e-12, "{th:?}");
        assert!(th[2].abs() <= 0.25 && (th[3] - THETA[3]).abs() <= 0.25, "{th:?}");
    }
}
