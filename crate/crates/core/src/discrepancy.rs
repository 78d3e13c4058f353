//! Distances between an observed data set and a synthetic one, as used by
//! the samplers: embedding, optional sub-sampling, then a transport distance
//! or a classical alternative.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metric::{pow_p, root_p, GroundMetric, MetricKind};
use crate::models::acf_summary;
use crate::rng::{purpose, RandomStream};
use crate::timeseries::{Embedding, Series};
use crate::transport::{
    exact_wasserstein, hilbert_distance, median_heuristic_bandwidth, mmd_squared_with_self,
    sinkhorn_rounded, subsample, swapping_distance, SinkhornOptions, DEFAULT_MAX_SWEEPS,
};

/// Summary statistics for the summary-based distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SummaryKind {
    /// Coordinate-wise sample mean.
    Mean,
    /// Sum of the first `lags` autocorrelations of the squared series.
    AcfSquares { lags: usize },
}

impl SummaryKind {
    pub fn compute(&self, data: &PointCloud) -> Result<Vec<f64>> {
        match *self {
            SummaryKind::Mean => Ok(data.mean()),
            SummaryKind::AcfSquares { lags } => {
                if data.dim() != 1 {
                    return Err(Error::InvalidArgument(
                        "autocorrelation summary needs a scalar series".into(),
                    ));
                }
                Ok(vec![acf_summary(data.as_slice(), lags)?])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceMethod {
    /// Exact `W_p`; sorting when the embedded data are scalar.
    Wasserstein,
    Hilbert,
    Swap { max_sweeps: usize },
    /// p-th root of the dual-Sinkhorn transport cost of the rounded plan,
    /// accepted even if the iterates stop short of the tolerance.
    Sinkhorn(SinkhornOptions),
    /// Square root of the (clamped) MMD² estimate. `None` picks the median
    /// heuristic on the observed embedded cloud.
    Mmd { bandwidth: Option<f64> },
    /// `(n⁻¹ Σ ρ(y_i, z_i)^p)^{1/p}`, matching points by index.
    Euclidean,
    /// Euclidean distance between summaries of the raw data.
    Summary(SummaryKind),
}

impl DistanceMethod {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "wasserstein" => Self::Wasserstein,
            "hilbert" => Self::Hilbert,
            "swap" => Self::Swap {
                max_sweeps: DEFAULT_MAX_SWEEPS,
            },
            "sinkhorn" => Self::Sinkhorn(SinkhornOptions::default()),
            "mmd" => Self::Mmd { bandwidth: None },
            "euclidean" => Self::Euclidean,
            "summary" => Self::Summary(SummaryKind::Mean),
            other => return Err(Error::Unknown(format!("distance method {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Wasserstein => "wasserstein",
            Self::Hilbert => "hilbert",
            Self::Swap { .. } => "swap",
            Self::Sinkhorn(_) => "sinkhorn",
            Self::Mmd { .. } => "mmd",
            Self::Euclidean => "euclidean",
            Self::Summary(_) => "summary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceConfig {
    pub method: DistanceMethod,
    pub embedding: Embedding,
    pub metric: GroundMetric,
    /// Compare random subsets of this many embedded points.
    pub subsample: Option<usize>,
}

impl DistanceConfig {
    pub fn new(method: DistanceMethod, embedding: Embedding, metric: GroundMetric) -> Self {
        Self {
            method,
            embedding,
            metric,
            subsample: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        match (&self.embedding, self.metric.kind()) {
            (Embedding::Curve { lambda }, MetricKind::CurveMatch { lambda: l }) if *lambda == l => {}
            (Embedding::Curve { .. }, _) => {
                return Err(Error::InvalidArgument(
                    "curve embedding needs the curve_match metric with the same lambda".into(),
                ))
            }
            (_, MetricKind::CurveMatch { .. }) => {
                return Err(Error::InvalidArgument(
                    "curve_match metric needs the curve embedding".into(),
                ))
            }
            _ => {}
        }
        if self.subsample == Some(0) {
            return Err(Error::InvalidArgument("subsample size must be >= 1".into()));
        }
        if let DistanceMethod::Mmd { bandwidth: Some(h) } = self.method {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {h}")));
            }
        }
        Ok(())
    }
}

/// A distance from a fixed observed data set, evaluated on synthetic data.
pub trait DataDistance: Send + Sync {
    /// `theta` is read only by parameter-dependent embeddings; `rng` only by
    /// sub-sampling.
    fn distance(&self, theta: &[f64], synthetic: &PointCloud, rng: &mut RandomStream) -> Result<f64>;
}

/// Observed-side quantities that do not depend on θ.
#[derive(Debug, Clone)]
enum Cache {
    None,
    /// Observed (sub-sampled) embedded cloud.
    Embedded(PointCloud),
    /// Observed sorted scalar values.
    Sorted(Vec<f64>),
    /// Observed embedded cloud with its MMD self-term.
    Mmd { cloud: PointCloud, self_term: f64 },
    Summary(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Discrepancy {
    config: DistanceConfig,
    observed: PointCloud,
    /// Fixed subset of observed embedded rows.
    obs_subset: Option<Vec<usize>>,
    bandwidth: f64,
    cache: Cache,
}

impl Discrepancy {
    /// `seed` fixes the observed-side subset when sub-sampling.
    pub fn new(observed: PointCloud, config: DistanceConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        observed.validate()?;
        let mut me = Self {
            config,
            observed,
            obs_subset: None,
            bandwidth: 0.0,
            cache: Cache::None,
        };
        if let DistanceMethod::Summary(kind) = me.config.method {
            me.cache = Cache::Summary(kind.compute(&me.observed)?);
            return Ok(me);
        }
        if me.config.embedding.needs_theta() {
            if let DistanceMethod::Mmd { bandwidth } = me.config.method {
                me.bandwidth = bandwidth.ok_or_else(|| {
                    Error::InvalidArgument("MMD on residuals needs an explicit bandwidth".into())
                })?;
            }
            if let Some(m) = me.config.subsample {
                // residual clouds have a θ-independent length
                let len = match me.config.embedding {
                    Embedding::Residual(crate::timeseries::ResidualModel::Ar1) => {
                        me.observed.len().saturating_sub(1)
                    }
                    _ => me.observed.len(),
                };
                me.obs_subset = Some(subset_indices(len, m, seed)?);
            }
            return Ok(me);
        }
        let mut emb = me.config.embedding.apply(&Series::new(me.observed.clone()), &[])?;
        if let Some(m) = me.config.subsample {
            let idx = subset_indices(emb.len(), m, seed)?;
            emb = emb.select(&idx);
            me.obs_subset = Some(idx);
        }
        me.cache = match me.config.method {
            DistanceMethod::Wasserstein if emb.dim() == 1 => {
                let mut v = emb.into_vec();
                v.sort_by(f64::total_cmp);
                Cache::Sorted(v)
            }
            DistanceMethod::Mmd { bandwidth } => {
                let h = match bandwidth {
                    Some(h) => h,
                    None => median_heuristic_bandwidth(&emb)?,
                };
                me.bandwidth = h;
                let self_term = crate::transport::mmd_self_term(&emb, h);
                Cache::Mmd {
                    cloud: emb,
                    self_term,
                }
            }
            _ => Cache::Embedded(emb),
        };
        Ok(me)
    }

    pub fn config(&self) -> &DistanceConfig {
        &self.config
    }

    pub fn observed(&self) -> &PointCloud {
        &self.observed
    }

    /// Bandwidth in use by the MMD method (0 otherwise).
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    fn embed_synthetic(&self, theta: &[f64], synthetic: &PointCloud, rng: &mut RandomStream) -> Result<PointCloud> {
        let emb = self.config.embedding.apply(&Series::new(synthetic.clone()), theta)?;
        match self.config.subsample {
            Some(m) => subsample(&emb, m, rng),
            None => Ok(emb),
        }
    }

    fn observed_at(&self, theta: &[f64]) -> Result<PointCloud> {
        let emb = self.config.embedding.apply(&Series::new(self.observed.clone()), theta)?;
        Ok(match &self.obs_subset {
            Some(idx) => emb.select(idx),
            None => emb,
        })
    }

    fn between(&self, x: &PointCloud, y: &PointCloud) -> Result<f64> {
        let m = &self.config.metric;
        match &self.config.method {
            DistanceMethod::Wasserstein => Ok(exact_wasserstein(x, y, m)?.value),
            DistanceMethod::Hilbert => Ok(hilbert_distance(x, y, m)?.value),
            DistanceMethod::Swap { max_sweeps } => Ok(swapping_distance(x, y, m, *max_sweeps)?.value),
            DistanceMethod::Sinkhorn(opts) => {
                Ok(root_p(sinkhorn_rounded(x, y, m, opts)?.result.value.max(0.0), m.p()))
            }
            DistanceMethod::Mmd { .. } => {
                let xs = crate::transport::mmd_self_term(x, self.bandwidth);
                Ok(mmd_squared_with_self(x, xs, y, self.bandwidth)?.max(0.0).sqrt())
            }
            DistanceMethod::Euclidean => index_distance(x, y, m),
            DistanceMethod::Summary(_) => unreachable!("summaries bypass the embedding"),
        }
    }
}

fn subset_indices(len: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 || m > len {
        return Err(Error::InvalidArgument(format!(
            "subsample size {m} outside 1..={len}"
        )));
    }
    let mut rng = RandomStream::new(seed, &[purpose::SUBSAMPLE]);
    let mut idx = rand::seq::index::sample(&mut rng, len, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// `(n⁻¹ Σ ρ(x_i, y_i)^p)^{1/p}` over paired rows.
pub fn index_distance(x: &PointCloud, y: &PointCloud, m: &GroundMetric) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch(x.len(), y.len()));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    let s: f64 = x.rows().zip(y.rows()).map(|(a, b)| m.cost(a, b)).sum();
    Ok(root_p(s / x.len() as f64, m.p()))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl DataDistance for Discrepancy {
    fn distance(&self, theta: &[f64], synthetic: &PointCloud, rng: &mut RandomStream) -> Result<f64> {
        if synthetic.dim() != self.observed.dim() {
            return Err(Error::DimensionMismatch(self.observed.dim(), synthetic.dim()));
        }
        let v = match &self.cache {
            Cache::Summary(s) => {
                let DistanceMethod::Summary(kind) = self.config.method else {
                    unreachable!()
                };
                euclid(s, &kind.compute(synthetic)?)
            }
            Cache::Sorted(xs) => {
                let y = self.embed_synthetic(theta, synthetic, rng)?;
                if y.len() != xs.len() {
                    return Err(Error::SizeMismatch(xs.len(), y.len()));
                }
                let mut ys = y.into_vec();
                ys.sort_by(f64::total_cmp);
                let p = self.config.metric.p();
                let s: f64 = xs.iter().zip(&ys).map(|(a, b)| pow_p((a - b).abs(), p)).sum();
                root_p(s / xs.len() as f64, p)
            }
            Cache::Mmd { cloud, self_term } => {
                let y = self.embed_synthetic(theta, synthetic, rng)?;
                mmd_squared_with_self(cloud, *self_term, &y, self.bandwidth)?
                    .max(0.0)
                    .sqrt()
            }
            Cache::Embedded(x) => {
                let y = self.embed_synthetic(theta, synthetic, rng)?;
                self.between(x, &y)?
            }
            Cache::None => {
                let x = self.observed_at(theta)?;
                let y = self.embed_synthetic(theta, synthetic, rng)?;
                self.between(&x, &y)?
            }
        };
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Degenerate(format!("distance evaluated to {v}")));
        }
        Ok(v)
    }
}

/// Two-stage distance: the gate distance must stay at or below a frozen
/// threshold, after which the inner distance is reported; `+∞` otherwise.
pub struct GatedDistance<'a> {
    pub gate: &'a dyn DataDistance,
    pub gate_threshold: f64,
    pub inner: &'a dyn DataDistance,
}

impl DataDistance for GatedDistance<'_> {
    fn distance(&self, theta: &[f64], synthetic: &PointCloud, rng: &mut RandomStream) -> Result<f64> {
        let g = self.gate.distance(theta, synthetic, rng)?;
        if g <= self.gate_threshold {
            self.inner.distance(theta, synthetic, rng)
        } else {
            Ok(f64::INFINITY)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GenerativeModel, NormalLocation};
    use crate::timeseries::ResidualModel;
    use crate::transport::wasserstein_1d;

    fn rng() -> RandomStream {
        RandomStream::new(0, &[0])
    }

    #[test]
    fn one_dimensional_fast_path_matches_sorting() {
        let x = PointCloud::from_values(&[3.0, -1.0, 2.0, 0.5]).unwrap();
        let y = PointCloud::from_values(&[0.0, 1.0, 4.0, -2.0]).unwrap();
        for p in [1.0, 2.0] {
            let cfg = DistanceConfig::new(DistanceMethod::Wasserstein, Embedding::None, GroundMetric::euclidean(p));
            let d = Discrepancy::new(x.clone(), cfg, 0).unwrap();
            let want = wasserstein_1d(&x, &y, p).unwrap().value;
            assert!((d.distance(&[], &y, &mut rng()).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn methods_agree_on_identical_data() {
        let m = NormalLocation::new();
        let x = m.simulate(&[0.0, 0.0], 40, &mut rng()).unwrap();
        for name in ["wasserstein", "hilbert", "swap", "sinkhorn", "mmd", "euclidean", "summary"] {
            let cfg = DistanceConfig::new(
                DistanceMethod::parse(name).unwrap(),
                Embedding::None,
                GroundMetric::euclidean(1.0),
            );
            let d = Discrepancy::new(x.clone(), cfg, 0).unwrap();
            let v = d.distance(&[], &x, &mut rng()).unwrap();
            // Sinkhorn keeps an entropic blur even between identical clouds;
            // the MMD square root magnifies rounding noise in MMD²
            let tol = match name {
                "sinkhorn" => 0.2,
                "mmd" => 1e-7,
                _ => 1e-12,
            };
            assert!(v <= tol, "{name}: {v}");
        }
    }

    #[test]
    fn curve_embedding_requires_curve_metric() {
        let x = PointCloud::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let bad = DistanceConfig::new(
            DistanceMethod::Wasserstein,
            Embedding::Curve { lambda: 1.0 },
            GroundMetric::euclidean(1.0),
        );
        assert!(Discrepancy::new(x.clone(), bad, 0).is_err());
        let good = DistanceConfig::new(
            DistanceMethod::Wasserstein,
            Embedding::Curve { lambda: 1.0 },
            GroundMetric::curve_match(1.0, 1.0).unwrap(),
        );
        let d = Discrepancy::new(x.clone(), good, 0).unwrap();
        let y = PointCloud::from_values(&[2.0, 3.0, 4.0]).unwrap();
        // identity matching costs 1 per point; shifting in time costs λ plus a value gap
        assert!((d.distance(&[], &y, &mut rng()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_embedding_uses_theta() {
        let x = PointCloud::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let cfg = DistanceConfig::new(
            DistanceMethod::Wasserstein,
            Embedding::Residual(ResidualModel::Ar1),
            GroundMetric::euclidean(1.0),
        );
        let d = Discrepancy::new(x.clone(), cfg, 0).unwrap();
        let y = PointCloud::from_values(&[2.0, 4.0, 6.0, 8.0]).unwrap();
        // at φ = 0, σ = 1 residuals are the series tails (2,3,4) vs (4,6,8)
        let v = d.distance(&[0.0, 0.0], &y, &mut rng()).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        // at σ = 2 they halve
        let v = d.distance(&[0.0, 2f64.ln()], &y, &mut rng()).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn subsampled_distance_is_reproducible() {
        let m = NormalLocation::new();
        let x = m.simulate(&[0.0, 0.0], 200, &mut rng()).unwrap();
        let y = m.simulate(&[1.0, 0.0], 200, &mut RandomStream::new(1, &[0])).unwrap();
        let mut cfg = DistanceConfig::new(DistanceMethod::Wasserstein, Embedding::None, GroundMetric::euclidean(1.0));
        cfg.subsample = Some(50);
        let d = Discrepancy::new(x, cfg, 7).unwrap();
        let a = d.distance(&[], &y, &mut RandomStream::new(3, &[1])).unwrap();
        let b = d.distance(&[], &y, &mut RandomStream::new(3, &[1])).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.5);
    }

    #[test]
    fn gated_distance() {
        let x = PointCloud::from_values(&[0.0, 1.0, 2.0]).unwrap();
        let gate = Discrepancy::new(
            x.clone(),
            DistanceConfig::new(DistanceMethod::Hilbert, Embedding::None, GroundMetric::euclidean(1.0)),
            0,
        )
        .unwrap();
        let inner = Discrepancy::new(
            x,
            DistanceConfig::new(
                DistanceMethod::Summary(SummaryKind::Mean),
                Embedding::None,
                GroundMetric::euclidean(1.0),
            ),
            0,
        )
        .unwrap();
        let g = GatedDistance {
            gate: &gate,
            gate_threshold: 0.5,
            inner: &inner,
        };
        let near = PointCloud::from_values(&[0.0, 1.0, 2.9]).unwrap();
        assert!((g.distance(&[], &near, &mut rng()).unwrap() - 0.3).abs() < 1e-12);
        let far = PointCloud::from_values(&[5.0, 6.0, 7.0]).unwrap();
        assert_eq!(g.distance(&[], &far, &mut rng()).unwrap(), f64::INFINITY);
    }
}
