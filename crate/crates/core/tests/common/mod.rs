//! Enumerable toy problem shared by the SMC tests and the acceptance suite.
#![allow(dead_code)]

use rand::Rng;
use wabc::discrepancy::DataDistance;
use wabc::smc::{Particle, Proposal, RHitKernel};
use wabc::{GenerativeModel, OutputKind, ParamSpace, PointCloud, Prior1d, ProductPrior, RandomStream, Result};

pub const PRIOR: [f64; 3] = [0.2, 0.5, 0.3];
pub const LIK: [[f64; 4]; 3] = [[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1], [0.25, 0.25, 0.25, 0.25]];

/// θ ∈ {0, 1, 2}, one observation in {0, 1, 2, 3}.
pub struct Discrete {
    prior: ProductPrior,
    space: ParamSpace,
}

impl Discrete {
    pub fn new() -> Self {
        let prior = ProductPrior::new(vec![Prior1d::Uniform { lo: 0.0, hi: 2.0 }]);
        let space = prior.space(&["theta"]);
        Self { prior, space }
    }
}

pub fn pick(p: &[f64], rng: &mut RandomStream) -> usize {
    let mut u: f64 = rng.random();
    for (i, w) in p.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    p.len() - 1
}

impl GenerativeModel for Discrete {
    fn name(&self) -> &'static str {
        "discrete"
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
        let j = theta[0] as usize;
        let v: Vec<f64> = (0..n).map(|_| pick(&LIK[j], rng) as f64).collect();
        PointCloud::from_values(&v)
    }
    fn prior_sample(&self, rng: &mut RandomStream) -> Vec<f64> {
        vec![pick(&PRIOR, rng) as f64]
    }
    fn prior_logdensity(&self, theta: &[f64]) -> f64 {
        match theta[0] {
            t if t == 0.0 || t == 1.0 || t == 2.0 => PRIOR[t as usize].ln(),
            _ => f64::NEG_INFINITY,
        }
    }
}

pub struct AbsFromOne;

impl DataDistance for AbsFromOne {
    fn distance(&self, _theta: &[f64], x: &PointCloud, _rng: &mut RandomStream) -> Result<f64> {
        Ok((x.as_slice()[0] - 1.0).abs())
    }
}

pub struct DiscreteProposal(pub [f64; 3]);

impl Proposal for DiscreteProposal {
    fn sample(&self, rng: &mut RandomStream) -> Vec<f64> {
        vec![pick(&self.0, rng) as f64]
    }
    fn logdensity(&self, theta: &[f64]) -> f64 {
        self.0[theta[0] as usize].ln()
    }
}

pub fn abc_posterior(eps: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..3)
        .map(|j| {
            let hit: f64 = (0..4).filter(|&x| (x as f64 - 1.0).abs() <= eps).map(|x| LIK[j][x]).sum();
            PRIOR[j] * hit
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

pub fn chain_tv(hits: usize, eps: f64, seed: u64) -> f64 {
    let model = Discrete::new();
    let kern = RHitKernel::new(hits, eps, 1).unwrap();
    let prop = DiscreteProposal([0.5, 0.25, 0.25]);
    let mut rng = RandomStream::new(seed, &[0]);
    let mut cur = Particle {
        theta: vec![1.0],
        synthetic: PointCloud::from_values(&[1.0]).unwrap(),
        dist: 0.0,
    };
    let iters = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..iters {
        cur = kern.step(&cur, &model, &AbsFromOne, &prop, &mut rng).0;
        assert!(cur.dist <= eps);
        counts[cur.theta[0] as usize] += 1;
    }
    let target = abc_posterior(eps);
    0.5 * (0..3).map(|j| (counts[j] as f64 / iters as f64 - target[j]).abs()).sum::<f64>()
}

