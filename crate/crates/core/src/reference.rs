//! Likelihood-based reference posteriors by random-walk Metropolis–Hastings,
//! and the distance used to compare samplers against them.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::cloud::{fmt_f64, PointCloud};
use crate::error::{Error, Result};
use crate::gaussian::MvNormal;
use crate::metric::GroundMetric;
use crate::models::GenerativeModel;
use crate::rng::{purpose, RandomStream};
use crate::transport::exact_wasserstein;

const INIT_ATTEMPTS: usize = 100;
const PILOT_ROUNDS: usize = 4;
/// Initial pilot step as a fraction of the prior standard deviations.
const PILOT_START_SCALE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct MhConfig {
    /// Iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub pilot: usize,
    pub seed: u64,
    /// Starting point for every chain; drawn from the prior when absent.
    pub init: Option<Vec<f64>>,
    /// Random-walk covariance. Tuned by the pilot run when absent.
    pub step_cov: Option<Vec<Vec<f64>>>,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            iterations: 22_000,
            burn_in: 2_000,
            thin: 1,
            chains: 4,
            pilot: 2_000,
            seed: 0,
            init: None,
            step_cov: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    /// `(iteration, θ, log posterior)` for each retained draw.
    pub draws: Vec<(usize, Vec<f64>, f64)>,
    pub accepted: usize,
    pub proposed: usize,
}

impl Chain {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct MhOutput {
    pub chains: Vec<Chain>,
    pub proposal: MvNormal,
}

impl MhOutput {
    /// Retained draws of all chains, chain by chain.
    pub fn pooled(&self) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .flat_map(|c| c.draws.iter().map(|d| d.1.clone()))
            .collect()
    }

    pub fn pooled_cloud(&self) -> Result<PointCloud> {
        PointCloud::from_rows(&self.pooled())
    }

    pub fn write_csv<W: Write>(&self, names: &[String], mut w: W) -> Result<()> {
        writeln!(w, "chain,iteration,{},logpost", names.join(","))?;
        for (c, chain) in self.chains.iter().enumerate() {
            for (it, theta, lp) in &chain.draws {
                let vals: Vec<String> = theta.iter().map(|v| fmt_f64(*v)).collect();
                writeln!(w, "{c},{it},{},{}", vals.join(","), fmt_f64(*lp))?;
            }
        }
        Ok(())
    }
}

pub fn log_posterior(model: &dyn GenerativeModel, data: &PointCloud, theta: &[f64]) -> f64 {
    let lp = model.prior_logdensity(theta);
    if !(lp > f64::NEG_INFINITY) {
        return f64::NEG_INFINITY;
    }
    match model.loglik(theta, data) {
        Ok(ll) if !ll.is_nan() => lp + ll,
        _ => f64::NEG_INFINITY,
    }
}

fn starting_point(
    model: &dyn GenerativeModel,
    data: &PointCloud,
    init: Option<&[f64]>,
    rng: &mut RandomStream,
) -> Result<(Vec<f64>, f64)> {
    if let Some(t) = init {
        model.param_space().check(t)?;
        let lp = log_posterior(model, data, t);
        if lp.is_finite() {
            return Ok((t.to_vec(), lp));
        }
    }
    for _ in 0..INIT_ATTEMPTS {
        let t = model.prior_sample(rng);
        let lp = log_posterior(model, data, &t);
        if lp.is_finite() {
            return Ok((t, lp));
        }
    }
    Err(Error::Degenerate(format!(
        "no starting point with finite log posterior after {INIT_ATTEMPTS} prior draws"
    )))
}

struct Walk {
    theta: Vec<f64>,
    lp: f64,
    accepted: usize,
}

fn mh_step(
    model: &dyn GenerativeModel,
    data: &PointCloud,
    prop: &MvNormal,
    w: &mut Walk,
    rng: &mut RandomStream,
) -> bool {
    let step = prop.sample(rng);
    let cand: Vec<f64> = w.theta.iter().zip(&step).map(|(a, b)| a + b).collect();
    let lp = log_posterior(model, data, &cand);
    let u: f64 = rng.random();
    if lp > f64::NEG_INFINITY && u.ln() < lp - w.lp {
        w.theta = cand;
        w.lp = lp;
        w.accepted += 1;
        true
    } else {
        false
    }
}

fn scaled_cov(samples: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let d = samples[0].len();
    let cloud = PointCloud::from_rows(samples).ok()?;
    let c = cloud.covariance();
    let m = DMatrix::from_fn(d, d, |i, j| c[i][j] * 2.38 * 2.38 / d as f64);
    if (0..d).any(|i| !(m[(i, i)] > 0.0)) {
        return None;
    }
    Some(m)
}

/// Pilot runs that tune the random-walk covariance to `(2.38²/d)·Σ̂`.
fn tune_proposal(
    model: &dyn GenerativeModel,
    data: &PointCloud,
    cfg: &MhConfig,
    rng: &mut RandomStream,
) -> Result<MvNormal> {
    let d = model.param_space().dim();
    let sd: Vec<f64> = model
        .prior()
        .factors()
        .iter()
        .map(|f| {
            let v = f.variance();
            if v.is_finite() && v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut cov = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            (PILOT_START_SCALE * sd[i]).powi(2)
        } else {
            0.0
        }
    });
    let (theta, lp) = starting_point(model, data, cfg.init.as_deref(), rng)?;
    let mut walk = Walk { theta, lp, accepted: 0 };
    let round = (cfg.pilot / PILOT_ROUNDS).max(1);
    for _ in 0..PILOT_ROUNDS {
        let prop = MvNormal::from_matrix(DVector::zeros(d), cov.clone())?;
        let mut samples = Vec::with_capacity(round);
        walk.accepted = 0;
        for _ in 0..round {
            mh_step(model, data, &prop, &mut walk, rng);
            samples.push(walk.theta.clone());
        }
        match scaled_cov(&samples) {
            Some(c) => cov = c,
            // no move in the whole round: shrink and retry
            None => cov *= 0.1,
        }
    }
    if (0..d).any(|i| !(cov[(i, i)] > 0.0 && cov[(i, i)].is_finite())) {
        return Err(Error::Degenerate("pilot proposal has zero variance".into()));
    }
    MvNormal::from_matrix(DVector::zeros(d), cov)
}

fn fixed_proposal(cov: &[Vec<f64>], d: usize) -> Result<MvNormal> {
    if cov.len() != d || cov.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(cov.len(), d));
    }
    if (0..d).any(|i| !(cov[i][i] > 0.0)) {
        return Err(Error::InvalidArgument("step covariance has a zero-variance direction".into()));
    }
    MvNormal::new(vec![0.0; d], cov.to_vec())
        .map_err(|_| Error::InvalidArgument("step covariance is not positive definite".into()))
}

/// Random-walk Metropolis–Hastings on the exact likelihood. Chains run in
/// parallel and each has its own random stream, so the draws do not depend
/// on the number of worker threads.
pub fn random_walk_mh(model: &dyn GenerativeModel, data: &PointCloud, cfg: &MhConfig) -> Result<MhOutput> {
    if !model.has_loglik() {
        return Err(Error::InvalidArgument(format!(
            "model {} has no tractable likelihood",
            model.name()
        )));
    }
    if cfg.chains == 0 || cfg.thin == 0 {
        return Err(Error::InvalidArgument("chains and thin must be >= 1".into()));
    }
    if cfg.burn_in >= cfg.iterations {
        return Err(Error::InvalidArgument(format!(
            "burn-in {} must be smaller than the iteration count {}",
            cfg.burn_in, cfg.iterations
        )));
    }
    let proposal = match &cfg.step_cov {
        Some(c) => fixed_proposal(c, model.param_space().dim())?,
        None => tune_proposal(model, data, cfg, &mut RandomStream::new(cfg.seed, &[purpose::REFERENCE, 0]))?,
    };
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = RandomStream::new(cfg.seed, &[purpose::MH, c as u64]);
            let (theta, lp) = starting_point(model, data, cfg.init.as_deref(), &mut rng)?;
            let mut walk = Walk { theta, lp, accepted: 0 };
            for _ in 0..cfg.burn_in {
                mh_step(model, data, &proposal, &mut walk, &mut rng);
            }
            walk.accepted = 0;
            let kept = cfg.iterations - cfg.burn_in;
            let mut draws = Vec::with_capacity(kept / cfg.thin + 1);
            for it in 0..kept {
                mh_step(model, data, &proposal, &mut walk, &mut rng);
                if (it + 1) % cfg.thin == 0 {
                    draws.push((cfg.burn_in + it + 1, walk.theta.clone(), walk.lp));
                }
            }
            Ok(Chain {
                draws,
                accepted: walk.accepted,
                proposed: kept,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MhOutput { chains, proposal })
}

/// Euclidean W1 between two parameter clouds. Clouds larger than
/// `max_points`, or of unequal size, are sub-sampled without replacement to
/// a common size first.
pub fn cloud_w1(a: &PointCloud, b: &PointCloud, max_points: usize, rng: &mut RandomStream) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if max_points == 0 {
        return Err(Error::InvalidArgument("max_points must be >= 1".into()));
    }
    let m = a.len().min(b.len()).min(max_points);
    let mut sub = |c: &PointCloud| {
        if c.len() == m {
            c.clone()
        } else {
            let idx = index::sample(rng, c.len(), m).into_vec();
            c.select(&idx)
        }
    };
    let (x, y) = (sub(a), sub(b));
    Ok(exact_wasserstein(&x, &y, &GroundMetric::euclidean(1.0))?.value)
}
