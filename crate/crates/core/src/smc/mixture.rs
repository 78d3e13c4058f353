//! Gaussian-mixture proposals fitted by weighted EM.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::MvNormal;
use crate::rng::RandomStream;

pub const EM_MAX_ITER: usize = 50;
pub const EM_REL_TOL: f64 = 1e-8;
const REG: f64 = 1e-8;
/// Fallback covariance for a collapsed population, as a fraction of the prior variances.
const FALLBACK_SCALE: f64 = 1e-2;

/// Proposal distribution over parameters.
pub trait Proposal: Send + Sync {
    fn sample(&self, rng: &mut RandomStream) -> Vec<f64>;
    fn logdensity(&self, theta: &[f64]) -> f64;
}

#[derive(Debug, Clone)]
pub struct MixtureProposal {
    weights: Vec<f64>,
    components: Vec<MvNormal>,
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn weighted_moments(points: &[Vec<f64>], w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let d = points[0].len();
    let total: f64 = w.iter().sum();
    let mut mean = DVector::zeros(d);
    for (p, &wi) in points.iter().zip(w) {
        mean += DVector::from_column_slice(p) * (wi / total);
    }
    let mut cov = DMatrix::zeros(d, d);
    for (p, &wi) in points.iter().zip(w) {
        let c = DVector::from_column_slice(p) - &mean;
        cov += &c * c.transpose() * (wi / total);
    }
    (mean, cov)
}

fn regularise(cov: &DMatrix<f64>, floor_trace: f64) -> DMatrix<f64> {
    let d = cov.nrows() as f64;
    let tr = cov.trace().max(floor_trace);
    cov + DMatrix::identity(cov.nrows(), cov.nrows()) * (REG * tr / d)
}

impl MixtureProposal {
    pub fn new(weights: Vec<f64>, components: Vec<MvNormal>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidArgument("mixture needs one weight per component".into()));
        }
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be >= 0 with a positive sum".into()));
        }
        Ok(Self {
            weights: weights.iter().map(|w| w / s).collect(),
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[MvNormal] {
        &self.components
    }

    /// Overall mean and covariance of the mixture.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.components[0].dim();
        let mut mean = DVector::zeros(d);
        for (w, c) in self.weights.iter().zip(&self.components) {
            mean += c.mean() * *w;
        }
        let mut cov = DMatrix::zeros(d, d);
        for (w, c) in self.weights.iter().zip(&self.components) {
            let m = c.mean() - &mean;
            cov += (c.cov() + &m * m.transpose()) * *w;
        }
        (mean, cov)
    }

    /// Weighted EM fit with `k` components and k-means++ starting centres.
    ///
    /// `prior_var` sets the covariance of the single-Gaussian fallback used
    /// when every particle is identical.
    pub fn fit(
        points: &[Vec<f64>],
        weights: &[f64],
        k: usize,
        prior_var: &[f64],
        rng: &mut RandomStream,
    ) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidArgument("mixture fit needs one weight per point".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        let d = points[0].len();
        // drop zero-weight points and merge nothing else: duplicates carry weight
        let (pts, w): (Vec<Vec<f64>>, Vec<f64>) = points
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| (p.clone(), w))
            .unzip();
        if pts.is_empty() {
            return Err(Error::Degenerate("all mixture weights are zero".into()));
        }
        let distinct: HashSet<Vec<u64>> = pts
            .iter()
            .map(|p| p.iter().map(|v| v.to_bits()).collect())
            .collect();
        let (gmean, gcov) = weighted_moments(&pts, &w);
        if distinct.len() == 1 {
            let cov = DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    FALLBACK_SCALE * prior_var[i].max(f64::MIN_POSITIVE)
                } else {
                    0.0
                }
            });
            return Self::new(vec![1.0], vec![MvNormal::from_matrix(gmean, cov)?]);
        }
        let floor = REG * gcov.trace();
        let k = k.min(distinct.len());
        if k == 1 {
            let g = MvNormal::from_matrix(gmean, regularise(&gcov, floor))?;
            return Self::new(vec![1.0], vec![g]);
        }
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v / total).collect();
        let centres = kmeanspp(&pts, &w, k, rng);
        let start_cov = regularise(&gcov, floor);
        let comps: Vec<MvNormal> = centres
            .into_iter()
            .map(|c| MvNormal::from_matrix(DVector::from_vec(c), start_cov.clone()))
            .collect::<Result<_>>()?;
        let pis = vec![1.0 / k as f64; k];
        em(&pts, &w, comps, pis, floor)
    }
}

/// One E-step followed by one M-step per iteration, so the returned
/// parameters always come from an M-step. Components whose responsibility
/// mass vanishes or whose covariance is not positive definite are dropped.
fn em(
    pts: &[Vec<f64>],
    w: &[f64],
    mut comps: Vec<MvNormal>,
    mut pis: Vec<f64>,
    floor: f64,
) -> Result<MixtureProposal> {
    let n = pts.len();
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..EM_MAX_ITER {
        let k = comps.len();
        let mut resp = vec![0.0; n * k];
        let mut buf = vec![0.0; k];
        let mut ll = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for j in 0..k {
                buf[j] = pis[j].ln() + comps[j].logpdf(p);
            }
            let lse = logsumexp(&buf);
            ll += w[i] * lse;
            for j in 0..k {
                resp[i * k + j] = (buf[j] - lse).exp();
            }
        }
        let mut new_pis = Vec::with_capacity(k);
        let mut new_comps = Vec::with_capacity(k);
        for j in 0..k {
            let rw: Vec<f64> = (0..n).map(|i| w[i] * resp[i * k + j]).collect();
            let nk: f64 = rw.iter().sum();
            if nk <= 1e-12 {
                continue;
            }
            let (m, c) = weighted_moments(pts, &rw);
            if let Ok(g) = MvNormal::from_matrix(m, regularise(&c, floor)) {
                new_pis.push(nk);
                new_comps.push(g);
            }
        }
        if new_comps.is_empty() {
            let (m, c) = weighted_moments(pts, w);
            let g = MvNormal::from_matrix(m, regularise(&c, floor))?;
            return MixtureProposal::new(vec![1.0], vec![g]);
        }
        let s: f64 = new_pis.iter().sum();
        pis = new_pis.iter().map(|p| p / s).collect();
        comps = new_comps;
        let converged = (ll - prev_ll).abs() <= EM_REL_TOL * ll.abs().max(1e-300);
        prev_ll = ll;
        if converged {
            break;
        }
    }
    MixtureProposal::new(pis, comps)
}

fn kmeanspp(pts: &[Vec<f64>], w: &[f64], k: usize, rng: &mut RandomStream) -> Vec<Vec<f64>> {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let pick = |scores: &[f64], rng: &mut RandomStream| {
        let total: f64 = scores.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, s) in scores.iter().enumerate() {
            if u < *s {
                return i;
            }
            u -= s;
        }
        scores.iter().rposition(|s| *s > 0.0).unwrap_or(0)
    };
    let mut centres = vec![pts[pick(w, rng)].clone()];
    let mut d2: Vec<f64> = pts.iter().map(|p| sq(p, &centres[0])).collect();
    while centres.len() < k {
        let scores: Vec<f64> = d2.iter().zip(w).map(|(d, wi)| d * wi).collect();
        if !(scores.iter().sum::<f64>() > 0.0) {
            break;
        }
        let c = pts[pick(&scores, rng)].clone();
        for (di, p) in d2.iter_mut().zip(pts) {
            *di = di.min(sq(p, &c));
        }
        centres.push(c);
    }
    centres
}

impl Proposal for MixtureProposal {
    fn sample(&self, rng: &mut RandomStream) -> Vec<f64> {
        let mut u: f64 = rng.random();
        let mut j = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            if u < *w {
                j = i;
                break;
            }
            u -= w;
        }
        self.components[j].sample(rng)
    }

    fn logdensity(&self, theta: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.logpdf(theta))
            .collect();
        logsumexp(&terms)
    }
}
