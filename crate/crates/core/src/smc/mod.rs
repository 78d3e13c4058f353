//! Adaptive-threshold SMC sampler for ABC.
//!
//! Each step picks a new threshold from the distances of the unique
//! particles, resamples the survivors, fits a Gaussian mixture to them and
//! moves every particle with the r-hit kernel using that mixture as an
//! independence proposal.

mod kernel;
mod mixture;

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::cloud::{fmt_f64, PointCloud};
use crate::discrepancy::{DataDistance, GatedDistance};
use crate::error::{Error, Result};
use crate::models::GenerativeModel;
use crate::rng::{purpose, RandomStream};

pub use kernel::{KernelStats, RHitKernel, DEFAULT_TRIAL_CAP};
pub use mixture::{MixtureProposal, Proposal};

/// A failed initial draw is retried once with a fresh parameter and data set.
const INIT_ATTEMPTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub theta: Vec<f64>,
    pub synthetic: PointCloud,
    pub dist: f64,
}

#[derive(Debug, Clone)]
pub struct SmcConfig {
    pub particles: usize,
    /// Fraction of unique particles kept by each new threshold.
    pub alpha: f64,
    /// Hits required by the r-hit kernel.
    pub hits: usize,
    pub components: usize,
    /// Simulation budget. Checked before each step, so the last step may overshoot.
    pub budget: u64,
    pub seed: u64,
    /// Kernel applications per particle per step.
    pub passes: usize,
    pub trial_cap: u64,
    pub max_steps: Option<usize>,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            particles: 2048,
            alpha: 0.5,
            hits: 2,
            components: 5,
            budget: 1_000_000,
            seed: 0,
            passes: 1,
            trial_cap: DEFAULT_TRIAL_CAP,
            max_steps: None,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidArgument("particle count must be >= 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.hits < 2 {
            return Err(Error::InvalidArgument("hits must be >= 2".into()));
        }
        if self.components == 0 || self.passes == 0 || self.trial_cap == 0 {
            return Err(Error::InvalidArgument("components, passes and trial cap must be >= 1".into()));
        }
        if self.budget < self.particles as u64 {
            return Err(Error::InvalidArgument(format!(
                "budget {} is smaller than the particle count {}",
                self.budget, self.particles
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub eps: f64,
    /// Cumulative simulations at the end of the step.
    pub simulations: u64,
    pub unique: usize,
    pub acceptance: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    /// The threshold could not decrease any further.
    NoDecrease,
    MaxSteps,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::NoDecrease => "no_decrease",
            StopReason::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmcState {
    pub particles: Vec<Particle>,
    pub eps: f64,
    pub step: usize,
    pub simulations: u64,
    /// One row per threshold value. Rejuvenation passes that keep the
    /// threshold fold into the current row.
    pub trace: Vec<TraceRow>,
    /// Steps spent rejuvenating at an unchanged threshold.
    pub stalls: usize,
    pub failures: u64,
    pub stop: Option<StopReason>,
    started: Instant,
}

impl SmcState {
    pub fn thetas(&self) -> Vec<Vec<f64>> {
        self.particles.iter().map(|p| p.theta.clone()).collect()
    }

    pub fn unique_count(&self) -> usize {
        unique_indices(&self.particles).len()
    }

    /// Particle parameters as a point cloud, one row per particle.
    pub fn theta_cloud(&self) -> Result<PointCloud> {
        PointCloud::from_rows(&self.thetas())
    }
}

/// Outcome of threshold adaptation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    New(f64),
    /// Too few unique particles: rejuvenate at the current threshold.
    Stall,
    Terminate,
}

/// Picks the `⌈αN⌉`-th smallest of the unique-particle distances, provided
/// it is strictly below `prev`.
pub fn adapt_threshold(unique_dists: &[f64], n: usize, alpha: f64, prev: f64) -> Threshold {
    if unique_dists.is_empty() {
        return Threshold::Terminate;
    }
    let first = unique_dists[0];
    if unique_dists.iter().all(|&d| d == first) {
        return Threshold::Terminate;
    }
    let k = ((alpha * n as f64).ceil() as usize).max(1);
    if unique_dists.len() < k {
        return Threshold::Stall;
    }
    let mut sorted = unique_dists.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cand = sorted[k - 1];
    if cand < prev {
        Threshold::New(cand)
    } else {
        Threshold::Terminate
    }
}

/// Systematic resampling: `n` indices drawn with one uniform offset.
pub fn systematic_resample(weights: &[f64], n: usize, rng: &mut RandomStream) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("no weights to resample".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite and >= 0".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all weights are zero".into()));
    }
    let u: f64 = rng.random();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0] / total;
    let mut j = 0;
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    for i in 0..n {
        let pos = (u + i as f64) / n as f64;
        while pos >= cum && j < last {
            j += 1;
            cum += weights[j] / total;
        }
        out.push(j);
    }
    Ok(out)
}

fn theta_key(theta: &[f64]) -> Vec<u64> {
    theta.iter().map(|v| v.to_bits()).collect()
}

/// Index of the first particle carrying each distinct parameter value.
fn unique_indices(particles: &[Particle]) -> Vec<usize> {
    let mut seen = HashSet::new();
    particles
        .iter()
        .enumerate()
        .filter(|(_, p)| seen.insert(theta_key(&p.theta)))
        .map(|(i, _)| i)
        .collect()
}

fn prior_variances(model: &dyn GenerativeModel) -> Vec<f64> {
    model
        .prior()
        .factors()
        .iter()
        .map(|f| {
            let v = f.variance();
            if v.is_finite() && v > 0.0 {
                v
            } else {
                1.0
            }
        })
        .collect()
}

/// Draws the initial population from the prior with `ε = +∞`.
pub fn init_population(
    model: &dyn GenerativeModel,
    distance: &dyn DataDistance,
    n_obs: usize,
    config: &SmcConfig,
) -> Result<SmcState> {
    config.validate()?;
    if n_obs == 0 {
        return Err(Error::InvalidArgument("synthetic data size must be >= 1".into()));
    }
    let started = Instant::now();
    let drawn: Vec<Result<(Particle, u64, u64)>> = (0..config.particles)
        .into_par_iter()
        .map(|i| {
            let mut prior_rng = RandomStream::new(config.seed, &[purpose::PRIOR, 0, i as u64]);
            let mut sim_rng = RandomStream::new(config.seed, &[purpose::INIT_SIM, 0, i as u64]);
            let mut last_err = None;
            for attempt in 0..INIT_ATTEMPTS {
                let theta = model.prior_sample(&mut prior_rng);
                let out = model
                    .simulate(&theta, n_obs, &mut sim_rng)
                    .and_then(|x| distance.distance(&theta, &x, &mut sim_rng).map(|d| (x, d)));
                match out {
                    Ok((synthetic, dist)) => {
                        let n = attempt as u64 + 1;
                        return Ok((Particle { theta, synthetic, dist }, n, n - 1));
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(last_err.expect("at least one attempt"))
        })
        .collect();
    let mut particles = Vec::with_capacity(config.particles);
    let (mut sims, mut failures) = (0, 0);
    for r in drawn {
        let (p, n, f) = r?;
        particles.push(p);
        sims += n;
        failures += f;
    }
    let mut state = SmcState {
        particles,
        eps: f64::INFINITY,
        step: 0,
        simulations: sims,
        trace: Vec::new(),
        stalls: 0,
        failures,
        stop: None,
        started,
    };
    let unique = state.unique_count();
    state.trace.push(TraceRow {
        step: 0,
        eps: f64::INFINITY,
        simulations: sims,
        unique,
        acceptance: 1.0,
        seconds: started.elapsed().as_secs_f64(),
    });
    Ok(state)
}

/// One SMC step. Returns `false` when the run should stop.
pub fn smc_step(
    state: &mut SmcState,
    model: &dyn GenerativeModel,
    distance: &dyn DataDistance,
    n_obs: usize,
    config: &SmcConfig,
) -> Result<bool> {
    if state.simulations >= config.budget {
        state.stop = Some(StopReason::Budget);
        return Ok(false);
    }
    if config.max_steps.is_some_and(|m| state.step >= m) {
        state.stop = Some(StopReason::MaxSteps);
        return Ok(false);
    }
    let n = config.particles;
    let t = state.step + 1;
    let uniq: Vec<f64> = unique_indices(&state.particles)
        .into_iter()
        .map(|i| state.particles[i].dist)
        .collect();
    let stalled = match adapt_threshold(&uniq, n, config.alpha, state.eps) {
        Threshold::Terminate => {
            state.stop = Some(StopReason::NoDecrease);
            return Ok(false);
        }
        Threshold::Stall => true,
        Threshold::New(e) => {
            state.eps = e;
            false
        }
    };
    let eps = state.eps;
    let weights: Vec<f64> = state
        .particles
        .iter()
        .map(|p| if p.dist <= eps { 1.0 } else { 0.0 })
        .collect();
    let idx = systematic_resample(&weights, n, &mut RandomStream::new(config.seed, &[purpose::RESAMPLE, t as u64]))?;
    let mut particles: Vec<Particle> = idx.iter().map(|&i| state.particles[i].clone()).collect();
    let thetas: Vec<Vec<f64>> = particles.iter().map(|p| p.theta.clone()).collect();
    let proposal = MixtureProposal::fit(
        &thetas,
        &vec![1.0; n],
        config.components,
        &prior_variances(model),
        &mut RandomStream::new(config.seed, &[purpose::MIXTURE, t as u64]),
    )?;
    let mut kern = RHitKernel::new(config.hits, eps, n_obs)?;
    kern.trial_cap = config.trial_cap;
    let (mut sims, mut accepted, mut failures) = (0u64, 0u64, 0u64);
    for pass in 0..config.passes {
        let moved: Vec<(Particle, KernelStats)> = particles
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut rng = RandomStream::new(config.seed, &[purpose::KERNEL, t as u64, pass as u64, i as u64]);
                kern.step(p, model, distance, &proposal, &mut rng)
            })
            .collect();
        particles = Vec::with_capacity(n);
        for (p, s) in moved {
            sims += s.simulations;
            failures += s.failures;
            accepted += s.accepted as u64;
            particles.push(p);
        }
    }
    state.particles = particles;
    state.step = t;
    state.simulations += sims;
    state.failures += failures;
    let unique = state.unique_count();
    let acceptance = accepted as f64 / (n * config.passes) as f64;
    let seconds = state.started.elapsed().as_secs_f64();
    if stalled {
        state.stalls += 1;
        let row = state.trace.last_mut().expect("trace starts with the prior row");
        row.simulations = state.simulations;
        row.unique = unique;
        row.acceptance = acceptance;
        row.seconds = seconds;
    } else {
        state.trace.push(TraceRow {
            step: t,
            eps,
            simulations: state.simulations,
            unique,
            acceptance,
            seconds,
        });
    }
    Ok(true)
}

/// Runs steps until the budget, a step limit or a stuck threshold stops the
/// run, calling `on_step` after initialisation and after each step.
pub fn run_with(
    model: &dyn GenerativeModel,
    distance: &dyn DataDistance,
    n_obs: usize,
    config: &SmcConfig,
    on_step: &mut dyn FnMut(&SmcState),
) -> Result<SmcState> {
    let mut state = init_population(model, distance, n_obs, config)?;
    on_step(&state);
    advance(&mut state, model, distance, n_obs, config, on_step)?;
    Ok(state)
}

pub fn run(
    model: &dyn GenerativeModel,
    distance: &dyn DataDistance,
    n_obs: usize,
    config: &SmcConfig,
) -> Result<SmcState> {
    run_with(model, distance, n_obs, config, &mut |_| {})
}

fn advance(
    state: &mut SmcState,
    model: &dyn GenerativeModel,
    distance: &dyn DataDistance,
    n_obs: usize,
    config: &SmcConfig,
    on_step: &mut dyn FnMut(&SmcState),
) -> Result<()> {
    while smc_step(state, model, distance, n_obs, config)? {
        on_step(state);
    }
    Ok(())
}

/// Second stage of a two-stage run. The stage-one threshold is frozen as a
/// gate on `gate`; particles are re-scored with `inner` and the run restarts
/// from `ε = +∞` with a fresh budget.
pub fn run_second_stage(
    first: SmcState,
    model: &dyn GenerativeModel,
    gate: &dyn DataDistance,
    inner: &dyn DataDistance,
    n_obs: usize,
    config: &SmcConfig,
    on_step: &mut dyn FnMut(&SmcState),
) -> Result<SmcState> {
    config.validate()?;
    if !first.eps.is_finite() {
        return Err(Error::InvalidArgument("the first-stage threshold must be finite".into()));
    }
    if first.particles.len() != config.particles {
        return Err(Error::SizeMismatch(first.particles.len(), config.particles));
    }
    let gated = GatedDistance {
        gate,
        gate_threshold: first.eps,
        inner,
    };
    let started = Instant::now();
    let rescored: Vec<Result<Particle>> = first
        .particles
        .into_par_iter()
        .enumerate()
        .map(|(i, mut p)| {
            let mut rng = RandomStream::new(config.seed, &[purpose::INIT_SIM, 1, i as u64]);
            p.dist = gated.distance(&p.theta, &p.synthetic, &mut rng)?;
            Ok(p)
        })
        .collect();
    let particles = rescored.into_iter().collect::<Result<Vec<_>>>()?;
    if particles.iter().all(|p| p.dist == f64::INFINITY) {
        return Err(Error::Degenerate("no particle satisfies the frozen first-stage threshold".into()));
    }
    let mut state = SmcState {
        particles,
        eps: f64::INFINITY,
        step: 0,
        simulations: 0,
        trace: Vec::new(),
        stalls: 0,
        failures: 0,
        stop: None,
        started,
    };
    let unique = state.unique_count();
    state.trace.push(TraceRow {
        step: 0,
        eps: f64::INFINITY,
        simulations: 0,
        unique,
        acceptance: 1.0,
        seconds: 0.0,
    });
    on_step(&state);
    advance(&mut state, model, &gated, n_obs, config, on_step)?;
    Ok(state)
}

/// Runs `f` on a dedicated pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut w: W) -> Result<()> {
    writeln!(w, "step,eps,simulations,unique,acceptance,seconds")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.eps),
            r.simulations,
            r.unique,
            fmt_f64(r.acceptance),
            fmt_f64(r.seconds)
        )?;
    }
    Ok(())
}

/// Final particles, one row each: parameters then the distance.
pub fn write_particles_csv<W: Write>(particles: &[Particle], names: &[String], mut w: W) -> Result<()> {
    writeln!(w, "{},dist", names.join(","))?;
    for p in particles {
        let mut line: Vec<String> = p.theta.iter().map(|v| fmt_f64(*v)).collect();
        line.push(fmt_f64(p.dist));
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(adapt_threshold(&[1.0, 2.0, 3.0, 4.0], 4, 0.5, f64::INFINITY), Threshold::New(2.0));
        assert_eq!(adapt_threshold(&[1.0, 2.0, 3.0, 4.0], 4, 1.0, f64::INFINITY), Threshold::New(4.0));
        assert_eq!(adapt_threshold(&[1.0, 2.0, 3.0, 4.0], 4, 1.0, 4.0), Threshold::Terminate);
        assert_eq!(adapt_threshold(&[3.0, 3.0, 3.0], 4, 0.5, 5.0), Threshold::Terminate);
        assert_eq!(adapt_threshold(&[1.0, 2.0], 8, 0.5, 5.0), Threshold::Stall);
    }

    #[test]
    fn systematic_counts() {
        let idx = systematic_resample(&[0.5, 0.25, 0.25], 4, &mut RandomStream::new(1, &[0])).unwrap();
        let c: Vec<usize> = (0..3).map(|j| idx.iter().filter(|&&i| i == j).count()).collect();
        assert_eq!(c, vec![2, 1, 1]);
    }

    #[test]
    fn systematic_never_picks_zero_weight() {
        let w = [0.0, 0.3, 0.0, 0.7, 0.0];
        for s in 0..200 {
            let idx = systematic_resample(&w, 7, &mut RandomStream::new(s, &[0])).unwrap();
            assert!(idx.iter().all(|&i| w[i] > 0.0));
            assert!(idx.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn systematic_rejects_bad_weights() {
        let mut r = RandomStream::new(0, &[0]);
        assert!(systematic_resample(&[], 3, &mut r).is_err());
        assert!(systematic_resample(&[0.0, 0.0], 3, &mut r).is_err());
        assert!(systematic_resample(&[1.0, -0.5], 3, &mut r).is_err());
        assert!(systematic_resample(&[1.0, f64::NAN], 3, &mut r).is_err());
    }

    #[test]
    fn config_checks() {
        let mut c = SmcConfig {
            budget: 10,
            particles: 20,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.budget = 100;
        assert!(c.validate().is_ok());
        c.hits = 1;
        assert!(c.validate().is_err());
    }
}
