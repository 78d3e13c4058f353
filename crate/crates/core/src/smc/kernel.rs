//! The r-hit Metropolis–Hastings kernel with an independence proposal.

use rand::Rng;

use super::mixture::Proposal;
use super::Particle;
use crate::cloud::PointCloud;
use crate::discrepancy::DataDistance;
use crate::error::{Error, Result};
use crate::models::GenerativeModel;
use crate::rng::RandomStream;

pub const DEFAULT_TRIAL_CAP: u64 = 10_000;

/// What one kernel application did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelStats {
    pub simulations: u64,
    pub accepted: bool,
    /// Simulations or distance evaluations that failed and were counted as misses.
    pub failures: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct RHitKernel {
    pub hits: usize,
    pub eps: f64,
    pub n_obs: usize,
    pub trial_cap: u64,
}

struct Trials {
    count: u64,
    failures: u64,
    /// Hitting data sets with their distances, when retained.
    kept: Vec<(PointCloud, f64)>,
    capped: bool,
}

impl RHitKernel {
    pub fn new(hits: usize, eps: f64, n_obs: usize) -> Result<Self> {
        if hits < 2 {
            return Err(Error::InvalidArgument("the r-hit kernel needs r >= 2".into()));
        }
        if n_obs == 0 {
            return Err(Error::InvalidArgument("synthetic data size must be >= 1".into()));
        }
        Ok(Self {
            hits,
            eps,
            n_obs,
            trial_cap: DEFAULT_TRIAL_CAP,
        })
    }

    /// Simulates at `theta` until `target` hits or `max_trials` trials.
    #[allow(clippy::too_many_arguments)]
    fn run_trials(
        &self,
        model: &dyn GenerativeModel,
        distance: &dyn DataDistance,
        theta: &[f64],
        target: usize,
        max_trials: u64,
        keep: bool,
        rng: &mut RandomStream,
    ) -> Trials {
        let mut t = Trials {
            count: 0,
            failures: 0,
            kept: Vec::new(),
            capped: false,
        };
        let mut hits = 0;
        while hits < target {
            if t.count >= max_trials {
                t.capped = true;
                break;
            }
            t.count += 1;
            let out = model
                .simulate(theta, self.n_obs, rng)
                .and_then(|x| distance.distance(theta, &x, rng).map(|d| (x, d)));
            match out {
                Ok((x, d)) if d <= self.eps => {
                    hits += 1;
                    if keep {
                        t.kept.push((x, d));
                    }
                }
                Ok(_) => {}
                Err(_) => t.failures += 1,
            }
        }
        t
    }

    /// One kernel application. The particle must already satisfy `dist <= eps`.
    ///
    /// The move is accepted when `u < A·N/(N'−1)`, with `N` the trials at the
    /// current point for `r−1` hits and `N'` the trials at the proposal for
    /// `r` hits. Drawing `u` and `N` first bounds the useful `N'`, so
    /// simulation at the proposal stops as soon as rejection is certain.
    pub fn step(
        &self,
        current: &Particle,
        model: &dyn GenerativeModel,
        distance: &dyn DataDistance,
        proposal: &dyn Proposal,
        rng: &mut RandomStream,
    ) -> (Particle, KernelStats) {
        let mut stats = KernelStats::default();
        let prop = proposal.sample(rng);
        let lp_new = model.prior_logdensity(&prop);
        if !(lp_new > f64::NEG_INFINITY) {
            return (current.clone(), stats);
        }
        let u: f64 = rng.random();
        let old = self.run_trials(model, distance, &current.theta, self.hits - 1, self.trial_cap, false, rng);
        stats.simulations += old.count;
        stats.failures += old.failures;
        if old.capped {
            return (current.clone(), stats);
        }
        let log_a = lp_new - model.prior_logdensity(&current.theta) + proposal.logdensity(&current.theta)
            - proposal.logdensity(&prop)
            + (old.count as f64).ln();
        // accept iff N' - 1 < exp(log_a - ln u)
        let log_limit = log_a - u.ln();
        let max_trials = if log_limit >= (self.trial_cap as f64).ln() {
            self.trial_cap
        } else {
            (log_limit.exp() + 1.0).ceil() as u64
        };
        let fresh = self.run_trials(model, distance, &prop, self.hits, max_trials, true, rng);
        stats.simulations += fresh.count;
        stats.failures += fresh.failures;
        if fresh.capped || (((fresh.count - 1) as f64).ln() >= log_limit) {
            return (current.clone(), stats);
        }
        let pick = rng.random_range(0..fresh.kept.len());
        let (x, d) = fresh.kept.into_iter().nth(pick).expect("r hits were kept");
        stats.accepted = true;
        (
            Particle {
                theta: prop,
                synthetic: x,
                dist: d,
            },
            stats,
        )
    }
}
