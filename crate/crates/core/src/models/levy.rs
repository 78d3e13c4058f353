use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};

use super::{check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;
use crate::timeseries::Embedding;

/// Lévy-driven stochastic volatility with θ = (μ, β, ξ, ω², λ).
#[derive(Debug, Clone)]
pub struct LevySv {
    prior: ProductPrior,
    space: ParamSpace,
}

/// Jumps arriving during one unit period.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeriodJumps {
    /// Arrival offsets inside the period, in `(0, 1)`.
    pub offsets: Vec<f64>,
    pub sizes: Vec<f64>,
}

/// One latent transition: returns `(z_{t+1}, v_{t+1})`.
pub fn levy_transition(z: f64, lambda: f64, jumps: &PeriodJumps) -> (f64, f64) {
    let decay = (-lambda).exp();
    let mut z_next = decay * z;
    let mut total = 0.0;
    for (&c, &e) in jumps.offsets.iter().zip(&jumps.sizes) {
        z_next += (-lambda * (1.0 - c)).exp() * e;
        total += e;
    }
    (z_next, (z - z_next + total) / lambda)
}

impl LevySv {
    pub fn new() -> Self {
        let prior = ProductPrior::new(vec![
            Prior1d::Normal {
                mean: 0.0,
                sd: 2f64.sqrt(),
            },
            Prior1d::Normal {
                mean: 0.0,
                sd: 2f64.sqrt(),
            },
            Prior1d::Exponential { rate: 0.2 },
            Prior1d::Exponential { rate: 0.2 },
            Prior1d::Exponential { rate: 1.0 },
        ]);
        let space = prior.space(&["mu", "beta", "xi", "omega2", "lambda"]);
        Self { prior, space }
    }

    /// Simulates returns together with the spot volatility path `z_0..z_n`.
    pub fn simulate_path(theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mu, beta, xi, omega2, lambda) = (theta[0], theta[1], theta[2], theta[3], theta[4]);
        if !(xi > 0.0 && omega2 > 0.0 && lambda > 0.0) {
            return Err(Error::OutOfSupport(format!(
                "xi, omega2, lambda must be > 0, got {xi}, {omega2}, {lambda}"
            )));
        }
        let shape = xi * xi / omega2;
        let rate = xi / omega2;
        let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::OutOfSupport(e.to_string()))?;
        let jump_size = Exp::new(rate).map_err(|e| Error::OutOfSupport(e.to_string()))?;
        let jump_mean = lambda * shape;
        let jump_count = if jump_mean > 0.0 {
            Some(Poisson::new(jump_mean).map_err(|e| Error::OutOfSupport(e.to_string()))?)
        } else {
            None
        };
        let mut z = gamma.sample(rng);
        let mut path = Vec::with_capacity(n + 1);
        path.push(z);
        let mut y = Vec::with_capacity(n);
        let mut jumps = PeriodJumps::default();
        for _ in 0..n {
            let k = jump_count.as_ref().map_or(0.0, |p| p.sample(rng)) as usize;
            jumps.offsets.clear();
            jumps.sizes.clear();
            for _ in 0..k {
                jumps.offsets.push(rng.random::<f64>());
                jumps.sizes.push(jump_size.sample(rng));
            }
            let (z_next, v) = levy_transition(z, lambda, &jumps);
            z = z_next;
            path.push(z);
            let e: f64 = StandardNormal.sample(rng);
            y.push(mu + beta * v + v.max(0.0).sqrt() * e);
        }
        Ok((y, path))
    }
}

impl Default for LevySv {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for LevySv {
    fn name(&self) -> &'static str {
        "levy_sv"
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
            stride: 1,
        }
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud> {
        check_theta(self, theta)?;
        let (y, _) = Self::simulate_path(theta, n, rng)?;
        Ok(PointCloud::from_raw(y, 1))
    }
}

/// Sum of the first `lags` sample autocorrelations of the squared series,
/// with the biased `1/T` autocovariance.
pub fn acf_summary(y: &[f64], lags: usize) -> Result<f64> {
    let t = y.len();
    if t <= lags {
        return Err(Error::InvalidArgument(format!(
            "series of length {t} is too short for {lags} lags"
        )));
    }
    let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mean = sq.iter().sum::<f64>() / t as f64;
    let c: Vec<f64> = sq.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>();
    if !(c0 > 0.0) {
        return Err(Error::Degenerate("squared series has zero variance".into()));
    }
    let mut total = 0.0;
    for l in 1..=lags {
        let cl: f64 = c[..t - l].iter().zip(&c[l..]).map(|(a, b)| a * b).sum();
        total += cl / c0;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: [f64; 5] = [0.0, 0.0, 0.5, 0.0625, 0.01];

    #[test]
    fn empty_period_decays() {
        let (z1, v1) = levy_transition(2.0, 0.3, &PeriodJumps::default());
        assert!((z1 - 2.0 * (-0.3f64).exp()).abs() < 1e-15);
        assert!((v1 - (2.0 - z1) / 0.3).abs() < 1e-15);
    }

    #[test]
    fn jump_contributions() {
        let jumps = PeriodJumps {
            offsets: vec![0.25, 0.75],
            sizes: vec![1.0, 2.0],
        };
        let (z1, v1) = levy_transition(1.0, 0.5, &jumps);
        let want = (-0.5f64).exp() + (-0.375f64).exp() + 2.0 * (-0.125f64).exp();
        assert!((z1 - want).abs() < 1e-15);
        assert!((v1 - (1.0 - want + 3.0) / 0.5).abs() < 1e-13);
    }

    #[test]
    fn spot_volatility_mean_is_xi() {
        // average over independent paths: with λ = 0.01 one path mixes slowly
        let mut total = 0.0;
        let mut count = 0.0;
        for rep in 0..40 {
            let (_, z) =
                LevySv::simulate_path(&THETA, 5_000, &mut RandomStream::new(1, &[rep])).unwrap();
            total += z.iter().sum::<f64>();
            count += z.len() as f64;
        }
        let mean = total / count;
        assert!((mean - 0.5).abs() < 0.025, "{mean}");
    }

    #[test]
    fn acf_hand_computed() {
        // y² = (1, 4, 9, 16), mean 7.5, centred (−6.5, −3.5, 1.5, 8.5)
        let c0: f64 = 6.5 * 6.5 + 3.5 * 3.5 + 1.5 * 1.5 + 8.5 * 8.5;
        let c1 = 6.5 * 3.5 - 3.5 * 1.5 + 1.5 * 8.5;
        let c2 = -6.5 * 1.5 - 3.5 * 8.5;
        let got = acf_summary(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert!((got - (c1 + c2) / c0).abs() < 1e-15);
        assert!(acf_summary(&[2.0; 10], 3).is_err());
        assert!(acf_summary(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn acf_of_noise_is_small() {
        let mut rng = RandomStream::new(2, &[0]);
        let y: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = acf_summary(&y, 50).unwrap();
        assert!(s.abs() < 3.0 * (50.0f64 / 10_000.0).sqrt(), "{s}");
    }

    #[test]
    fn rejects_nonpositive_rates() {
        let m = LevySv::new();
        assert!(m.simulate(&[0.0, 0.0, 0.0, 0.1, 0.1], 5, &mut RandomStream::new(1, &[0])).is_err());
    }
}
