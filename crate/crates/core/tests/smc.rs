use std::sync::atomic::{AtomicU64, Ordering};

use proptest::prelude::*;
use wabc::discrepancy::{DataDistance, Discrepancy, DistanceConfig, DistanceMethod};
use wabc::models::NormalLocation;
use wabc::smc::*;
use wabc::timeseries::Embedding;
use wabc::{GenerativeModel, GroundMetric, OutputKind, ParamSpace, PointCloud, ProductPrior, RandomStream, Result};

mod common;

use common::*;

#[test]
fn rhit_kernel_keeps_discrete_abc_posterior() {
    for (hits, eps) in [(2, 0.0), (3, 0.0), (2, 1.0)] {
        let tv = chain_tv(hits, eps, 7 + hits as u64);
        assert!(tv <= 0.05, "r={hits} eps={eps} tv={tv}");
    }
}

struct Counting<M> {
    inner: M,
    calls: AtomicU64,
}

impl<M: GenerativeModel> GenerativeModel for Counting<M> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }
    fn prior(&self) -> &ProductPrior {
        self.inner.prior()
    }
    fn param_space(&self) -> &ParamSpace {
        self.inner.param_space()
    }
    fn output(&self) -> OutputKind {
        self.inner.output()
    }
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }
    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.simulate(theta, n, rng)
    }
}

fn normal_setup(method: &str) -> (NormalLocation, Discrepancy) {
    let m = NormalLocation::new();
    let obs = m.simulate(&[1.0, -0.5], 30, &mut RandomStream::new(99, &[1])).unwrap();
    let cfg = DistanceConfig::new(DistanceMethod::parse(method).unwrap(), Embedding::None, GroundMetric::euclidean(1.0));
    (m, Discrepancy::new(obs, cfg, 3).unwrap())
}

fn small_config(seed: u64) -> SmcConfig {
    SmcConfig {
        particles: 64,
        budget: 4000,
        seed,
        ..Default::default()
    }
}

#[test]
fn simulation_count_is_exact_and_trace_is_consistent() {
    let (m, d) = normal_setup("wasserstein");
    let model = Counting {
        inner: m,
        calls: AtomicU64::new(0),
    };
    let cfg = small_config(5);
    let state = run(&model, &d, 30, &cfg).unwrap();
    assert_eq!(model.calls.load(Ordering::Relaxed), state.simulations);
    assert_eq!(state.trace.last().unwrap().simulations, state.simulations);
    assert_eq!(state.stop, Some(StopReason::Budget));
    assert!(state.trace.windows(2).all(|w| w[1].eps < w[0].eps));
    assert!(state.trace.windows(2).all(|w| w[1].simulations >= w[0].simulations));
    assert!(state.particles.iter().all(|p| p.dist <= state.eps));
    assert_eq!(state.particles.len(), 64);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let (m, d) = normal_setup("hilbert");
    let cfg = small_config(11);
    let a = with_workers(1, || run(&m, &d, 30, &cfg)).unwrap().unwrap();
    let b = with_workers(4, || run(&m, &d, 30, &cfg)).unwrap().unwrap();
    assert_eq!(a.simulations, b.simulations);
    assert_eq!(a.eps.to_bits(), b.eps.to_bits());
    for (p, q) in a.particles.iter().zip(&b.particles) {
        assert_eq!(p, q);
    }
    let mut out_a = Vec::new();
    let mut out_b = Vec::new();
    let names = m.param_space().names().to_vec();
    write_particles_csv(&a.particles, &names, &mut out_a).unwrap();
    write_particles_csv(&b.particles, &names, &mut out_b).unwrap();
    assert_eq!(out_a, out_b);
}

#[test]
fn population_concentrates_near_the_truth() {
    let (m, d) = normal_setup("wasserstein");
    let cfg = SmcConfig {
        particles: 256,
        budget: 20_000,
        seed: 2,
        ..Default::default()
    };
    let state = run(&m, &d, 30, &cfg).unwrap();
    let mean = state.theta_cloud().unwrap().mean();
    // the conjugate posterior sd is about 0.18 at n = 30
    assert!((mean[0] - 1.0).abs() < 0.6 && (mean[1] + 0.5).abs() < 0.6, "{mean:?}");
    assert!(state.eps < state.trace[1].eps);
}

#[test]
fn second_stage_starts_from_gated_population() {
    let (m, d) = normal_setup("hilbert");
    let (_, inner) = normal_setup("summary");
    let cfg = small_config(21);
    let first = run(&m, &d, 30, &cfg).unwrap();
    let eps_h = first.eps;
    let mut seen_first = false;
    let second = run_second_stage(first, &m, &d, &inner, 30, &cfg, &mut |s| {
        if !seen_first {
            assert!(s.particles.iter().all(|p| p.dist.is_finite()));
            seen_first = true;
        }
    })
    .unwrap();
    assert!(seen_first);
    assert!(second.simulations >= cfg.budget);
    let mut rng = RandomStream::new(0, &[0]);
    for p in &second.particles {
        assert!(d.distance(&p.theta, &p.synthetic, &mut rng).unwrap() <= eps_h);
        assert!(p.dist <= second.eps);
    }
}

#[test]
fn kernel_edge_cases() {
    let model = Discrete::new();
    let cur = Particle {
        theta: vec![1.0],
        synthetic: PointCloud::from_values(&[1.0]).unwrap(),
        dist: 0.0,
    };
    // every simulation hits and the proposal is the current point
    let kern = RHitKernel::new(2, 10.0, 1).unwrap();
    let same = DiscreteProposal([0.0, 1.0, 0.0]);
    for s in 0..50 {
        let (_, st) = kern.step(&cur, &model, &AbsFromOne, &same, &mut RandomStream::new(s, &[0]));
        assert!(st.accepted);
        assert_eq!(st.simulations, 3);
    }
    struct Outside;
    impl Proposal for Outside {
        fn sample(&self, _rng: &mut RandomStream) -> Vec<f64> {
            vec![5.0]
        }
        fn logdensity(&self, _theta: &[f64]) -> f64 {
            0.0
        }
    }
    let (p, st) = kern.step(&cur, &model, &AbsFromOne, &Outside, &mut RandomStream::new(0, &[0]));
    assert!(!st.accepted);
    assert_eq!(st.simulations, 0);
    assert_eq!(p, cur);
}

#[test]
fn budget_equal_to_population_returns_prior_draws() {
    let (m, d) = normal_setup("hilbert");
    let cfg = SmcConfig {
        particles: 32,
        budget: 32,
        ..Default::default()
    };
    let s = run(&m, &d, 30, &cfg).unwrap();
    assert_eq!(s.simulations, 32);
    assert_eq!(s.trace.len(), 1);
    assert_eq!(s.trace[0].eps, f64::INFINITY);
    assert_eq!(s.unique_count(), 32);
    let bad = SmcConfig { budget: 31, ..cfg };
    assert!(run(&m, &d, 30, &bad).is_err());
}

#[test]
fn second_stage_with_constant_summary_keeps_the_gate() {
    struct Zero;
    impl DataDistance for Zero {
        fn distance(&self, _t: &[f64], _x: &PointCloud, _r: &mut RandomStream) -> Result<f64> {
            Ok(0.0)
        }
    }
    let (m, d) = normal_setup("hilbert");
    let cfg = small_config(4);
    let first = run(&m, &d, 30, &cfg).unwrap();
    let second = run_second_stage(first, &m, &d, &Zero, 30, &cfg, &mut |_| {}).unwrap();
    // all gated distances are 0, so the threshold cannot move
    assert_eq!(second.stop, Some(StopReason::NoDecrease));
    assert_eq!(second.trace.len(), 1);
    assert!(second.particles.iter().all(|p| p.dist == 0.0));
}

proptest! {
    #[test]
    fn systematic_counts_are_floor_or_ceil(w in prop::collection::vec(0.0f64..1.0, 1..20), n in 1usize..200, seed in 0u64..1000) {
        prop_assume!(w.iter().sum::<f64>() > 1e-6);
        let idx = systematic_resample(&w, n, &mut RandomStream::new(seed, &[0])).unwrap();
        prop_assert_eq!(idx.len(), n);
        let total: f64 = w.iter().sum();
        for (j, wj) in w.iter().enumerate() {
            let c = idx.iter().filter(|&&i| i == j).count() as f64;
            let e = n as f64 * wj / total;
            prop_assert!(c >= (e - 1e-9).floor() && c <= (e + 1e-9).ceil(), "j={} c={} e={}", j, c, e);
        }
    }

    #[test]
    fn new_threshold_keeps_enough_unique_particles(d in prop::collection::vec(0.0f64..10.0, 1..50), alpha in 0.05f64..1.0, prev in 0.0f64..12.0) {
        let n = d.len();
        if let Threshold::New(e) = adapt_threshold(&d, n, alpha, prev) {
            prop_assert!(e < prev);
            let k = (alpha * n as f64).ceil() as usize;
            prop_assert!(d.iter().filter(|&&x| x <= e).count() >= k);
        }
    }
}
