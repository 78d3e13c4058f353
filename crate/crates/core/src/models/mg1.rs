use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{check_theta, GenerativeModel, OutputKind};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{ParamSpace, Prior1d, ProductPrior};
use crate::rng::RandomStream;

/// Interdeparture times of a single-server queue given service times `u`
/// and interarrival times `w`.
pub fn mg1_recursion(u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if u.len() != w.len() {
        return Err(Error::SizeMismatch(u.len(), w.len()));
    }
    if let Some(v) = u.iter().chain(w).find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "service and interarrival times must be finite and >= 0, got {v}"
        )));
    }
    let mut arrivals = 0.0;
    let mut departures = 0.0;
    let mut y = Vec::with_capacity(u.len());
    for (ui, wi) in u.iter().zip(w) {
        arrivals += wi;
        let yi = ui + (arrivals - departures).max(0.0);
        departures += yi;
        y.push(yi);
    }
    Ok(y)
}

/// M/G/1 queue with uniform service on `[θ1, θ2]` and exponential
/// interarrivals of rate `θ3`, parametrised by `(θ1, θ2 − θ1, θ3)`.
#[derive(Debug, Clone)]
pub struct Mg1 {
    prior: ProductPrior,
    space: ParamSpace,
}

impl Mg1 {
    pub fn new() -> Self {
        Self::with_theta1_upper(10.0)
    }

    /// Prior on θ1 restricted to `[0, theta1_max]`, typically the smallest
    /// observed interdeparture time.
    pub fn constrained(theta1_max: f64) -> Result<Self> {
        if !(theta1_max > 0.0 && theta1_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "theta1 upper bound must be positive, got {theta1_max}"
            )));
        }
        Ok(Self::with_theta1_upper(theta1_max.min(10.0)))
    }

    fn with_theta1_upper(hi: f64) -> Self {
        let prior = ProductPrior::new(vec![
            Prior1d::Uniform { lo: 0.0, hi },
            Prior1d::Uniform { lo: 0.0, hi: 10.0 },
            Prior1d::Uniform {
                lo: 0.0,
                hi: 1.0 / 3.0,
            },
        ]);
        let space = prior.space(&["theta1", "theta2_minus_theta1", "theta3"]);
        Self { prior, space }
    }
}

impl Default for Mg1 {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerativeModel for Mg1 {
    fn name(&self) -> &'static str {
        "mg1"
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
        let (t1, width, rate) = (theta[0], theta[1], theta[2]);
        let exp = Exp::new(rate)
            .ok()
            .filter(|_| rate > 0.0)
            .ok_or_else(|| Error::OutOfSupport(format!("theta3 = {rate} must be > 0")))?;
        let mut u = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            u.push(t1 + width * rng.random::<f64>());
            w.push(exp.sample(rng));
        }
        Ok(PointCloud::from_raw(mg1_recursion(&u, &w)?, 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_examples() {
        assert_eq!(mg1_recursion(&[1.0, 1.0], &[0.5, 0.1]).unwrap(), vec![1.5, 1.0]);
        assert_eq!(mg1_recursion(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap(), vec![1.0, 2.0, 3.0]);
        // idle server: each customer arrives after the previous one left
        let y = mg1_recursion(&[1.0, 1.0], &[100.0, 100.0]).unwrap();
        assert_eq!(y, vec![101.0, 100.0]);
        assert!(mg1_recursion(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mg1_recursion(&[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn interdepartures_exceed_service_floor() {
        let m = Mg1::new();
        let y = m.simulate(&[4.0, 3.0, 0.15], 50, &mut RandomStream::new(1, &[0])).unwrap();
        assert!(y.as_slice().iter().all(|&v| v >= 4.0));
        assert!(m.simulate(&[4.0, 3.0, 0.0], 5, &mut RandomStream::new(1, &[0])).is_err());
    }

    #[test]
    fn constrained_prior() {
        let m = Mg1::constrained(4.2).unwrap();
        assert_eq!(m.prior_logdensity(&[4.3, 1.0, 0.1]), f64::NEG_INFINITY);
        assert!(m.prior_logdensity(&[4.1, 1.0, 0.1]).is_finite());
    }
}
