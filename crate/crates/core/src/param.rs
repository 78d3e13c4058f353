//! Parameter spaces and priors.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub type ParamVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// Closed interval; `hi` may be infinite.
    Interval { lo: f64, hi: f64 },
    Unbounded,
}

impl Support {
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Support::Interval { lo, hi } => v >= lo && v <= hi,
            Support::Unbounded => v.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    names: Vec<String>,
    supports: Vec<Support>,
}

impl ParamSpace {
    pub fn new(names: &[&str], supports: Vec<Support>) -> Result<Self> {
        if names.is_empty() || names.len() != supports.len() {
            return Err(Error::InvalidArgument(
                "parameter space needs one support per name".into(),
            ));
        }
        for (n, s) in names.iter().zip(&supports) {
            if let Support::Interval { lo, hi } = s {
                if !(lo < hi) {
                    return Err(Error::InvalidArgument(format!("empty interval for {n}")));
                }
            }
        }
        Ok(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            supports,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.supports.iter().zip(theta).all(|(s, &v)| s.contains(v))
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters ({}), got {}",
                self.dim(),
                self.names.join(","),
                theta.len()
            )));
        }
        for ((n, s), &v) in self.names.iter().zip(&self.supports).zip(theta) {
            if !s.contains(v) {
                return Err(Error::OutOfSupport(format!("{n} = {v}")));
            }
        }
        Ok(())
    }
}

/// One-dimensional prior factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior1d {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl Prior1d {
    pub fn support(&self) -> Support {
        match *self {
            Prior1d::Uniform { lo, hi } => Support::Interval { lo, hi },
            Prior1d::Normal { .. } => Support::Unbounded,
            Prior1d::Exponential { .. } => Support::Interval {
                lo: 0.0,
                hi: f64::INFINITY,
            },
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match *self {
            Prior1d::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Prior1d::Normal { mean, sd } => Normal::new(mean, sd).unwrap().sample(rng),
            Prior1d::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
        }
    }

    pub fn logdensity(&self, v: f64) -> f64 {
        match *self {
            Prior1d::Uniform { lo, hi } => {
                if v >= lo && v <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior1d::Normal { mean, sd } => {
                let z = (v - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Prior1d::Exponential { rate } => {
                if v >= 0.0 {
                    rate.ln() - rate * v
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Prior1d::Uniform { lo, hi } => 0.5 * (lo + hi),
            Prior1d::Normal { mean, .. } => mean,
            Prior1d::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Prior1d::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Prior1d::Normal { sd, .. } => sd * sd,
            Prior1d::Exponential { rate } => 1.0 / (rate * rate),
        }
    }
}

/// Independent product prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPrior {
    factors: Vec<Prior1d>,
}

impl ProductPrior {
    pub fn new(factors: Vec<Prior1d>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[Prior1d] {
        &self.factors
    }

    pub fn space(&self, names: &[&str]) -> ParamSpace {
        ParamSpace::new(names, self.factors.iter().map(|f| f.support()).collect())
            .expect("prior factors define a valid space")
    }

    pub fn sample(&self, rng: &mut RandomStream) -> ParamVector {
        self.factors.iter().map(|f| f.sample(rng)).collect()
    }

    pub fn logdensity(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.factors.len() {
            return f64::NEG_INFINITY;
        }
        self.factors
            .iter()
            .zip(theta)
            .map(|(f, &v)| f.logdensity(v))
            .sum()
    }
}
