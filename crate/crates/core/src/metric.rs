//! Ground metrics on observation space.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    Euclidean,
    L1,
    /// `‖y − z‖ + λ|t − s|` on points laid out as `(t, y...)`.
    CurveMatch { lambda: f64 },
}

/// A ground distance together with the transport order `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundMetric {
    kind: MetricKind,
    p: f64,
}

impl GroundMetric {
    pub fn new(kind: MetricKind, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("order p must be >= 1, got {p}")));
        }
        if let MetricKind::CurveMatch { lambda } = kind {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "curve-matching weight must be >= 0, got {lambda}"
                )));
            }
        }
        Ok(Self { kind, p })
    }

    pub fn euclidean(p: f64) -> Self {
        Self::new(MetricKind::Euclidean, p).expect("invalid order")
    }

    pub fn l1(p: f64) -> Self {
        Self::new(MetricKind::L1, p).expect("invalid order")
    }

    pub fn curve_match(lambda: f64, p: f64) -> Result<Self> {
        Self::new(MetricKind::CurveMatch { lambda }, p)
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Smallest point dimension this metric accepts.
    pub fn min_dim(&self) -> usize {
        match self.kind {
            MetricKind::CurveMatch { .. } => 2,
            _ => 1,
        }
    }

    /// Whether the metric reduces to `|a − b|` on scalars.
    pub fn is_scalar_abs(&self, d: usize) -> bool {
        d == 1 && !matches!(self.kind, MetricKind::CurveMatch { .. })
    }

    /// ρ(a, b) without validation.
    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            MetricKind::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricKind::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            MetricKind::CurveMatch { lambda } => {
                let v: f64 = a[1..]
                    .iter()
                    .zip(&b[1..])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                v + lambda * (a[0] - b[0]).abs()
            }
        }
    }

    /// ρ(a, b)^p, the transport cost of moving `a` onto `b`.
    #[inline]
    pub fn cost(&self, a: &[f64], b: &[f64]) -> f64 {
        pow_p(self.dist(a, b), self.p)
    }
}

#[inline]
pub(crate) fn pow_p(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

#[inline]
pub(crate) fn root_p(x: f64, p: f64) -> f64 {
    let x = x.max(0.0);
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / p)
    }
}

/// Validated ρ(a, b).
pub fn ground_distance(a: &[f64], b: &[f64], m: &GroundMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    if a.len() < m.min_dim() {
        return Err(Error::DimensionMismatch(a.len(), m.min_dim()));
    }
    if let Some(col) = a.iter().chain(b).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: col / a.len(),
            col: col % a.len(),
        });
    }
    Ok(m.dist(a, b))
}
