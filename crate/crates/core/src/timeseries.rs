//! Turning time series into point clouds: curve matching, delay
//! reconstruction and residual reconstruction.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::cloud::{fmt_f64, parse_row, PointCloud};
use crate::error::{Error, Result};

/// A length-`T` series of `d_y`-dimensional observations at times `1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(PointCloud);

impl Series {
    pub fn new(values: PointCloud) -> Self {
        Self(values)
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        Ok(Self(PointCloud::from_values(v)?))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Observation at 1-based time `t`.
    pub fn at(&self, t: usize) -> &[f64] {
        self.0.row(t - 1)
    }

    pub fn values(&self) -> &PointCloud {
        &self.0
    }

    pub fn into_cloud(self) -> PointCloud {
        self.0
    }

    /// Scalar series as a slice; `None` when `d_y > 1`.
    pub fn scalar(&self) -> Option<&[f64]> {
        (self.dim() == 1).then(|| self.0.as_slice())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|j| format!("y{j}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, r) in self.0.rows().enumerate() {
            let mut line = vec![(t + 1).to_string()];
            line.extend(r.iter().map(|v| fmt_f64(*v)));
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads `t,y1..yd` rows; the time column must run 1, 2, ... in order.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header row".into()))??;
        let cols = header.split(',').count();
        if cols < 2 {
            return Err(Error::Parse("series header needs t and at least one value column".into()));
        }
        let mut data = Vec::new();
        let mut expected_t = 1.0;
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields = parse_row(&line, i + 2)?;
            if fields.len() != cols {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: cols,
                    found: fields.len(),
                });
            }
            if fields[0] != expected_t {
                return Err(Error::Parse(format!(
                    "line {}: time index {} out of order (expected {expected_t})",
                    i + 2,
                    fields[0]
                )));
            }
            expected_t += 1.0;
            data.extend_from_slice(&fields[1..]);
        }
        Ok(Self(PointCloud::new(data, cols - 1)?))
    }
}

impl From<PointCloud> for Series {
    fn from(c: PointCloud) -> Self {
        Self(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResidualModel {
    /// θ = (φ, log σ)
    Ar1,
    /// θ = (ω, φ, log σ, log A)
    Cosine,
}

impl ResidualModel {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "ar1" => Ok(Self::Ar1),
            "cosine" => Ok(Self::Cosine),
            other => Err(Error::Unknown(format!("residual model {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ar1 => "ar1",
            Self::Cosine => "cosine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    /// Observations taken as they are.
    None,
    /// Points `(t, y_t)`, meant for the curve-matching ground metric.
    Curve { lambda: f64 },
    /// Lagged tuples `(y_t, y_{t−τ1}, …, y_{t−τk})`.
    Delay { lags: Vec<usize>, stride: usize },
    /// Innovations recovered by inverting the model at θ.
    Residual(ResidualModel),
}

impl Embedding {
    pub fn validate(&self) -> Result<()> {
        match self {
            Embedding::None | Embedding::Residual(_) => Ok(()),
            Embedding::Curve { lambda } => {
                if *lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")))
                }
            }
            Embedding::Delay { lags, stride } => {
                if lags.is_empty() || lags[0] == 0 || lags.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidArgument(
                        "lags must be positive and strictly increasing".into(),
                    ));
                }
                if *stride == 0 {
                    return Err(Error::InvalidArgument("stride must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Whether embedding depends on the parameter value.
    pub fn needs_theta(&self) -> bool {
        matches!(self, Embedding::Residual(_))
    }

    /// Applies the embedding; `theta` is only read for residual reconstruction.
    pub fn apply(&self, s: &Series, theta: &[f64]) -> Result<PointCloud> {
        match self {
            Embedding::None => Ok(s.values().clone()),
            Embedding::Curve { .. } => Ok(curve_embed(s)),
            Embedding::Delay { lags, stride } => delay_embed(s, lags, *stride),
            Embedding::Residual(m) => residual_reconstruct(s, *m, theta),
        }
    }
}

/// Points `(t, y_t)` for `t = 1..=T`, using the raw integer time index.
pub fn curve_embed(s: &Series) -> PointCloud {
    let d = s.dim() + 1;
    let mut data = Vec::with_capacity(s.len() * d);
    for (t, r) in s.values().rows().enumerate() {
        data.push((t + 1) as f64);
        data.extend_from_slice(r);
    }
    PointCloud::from_raw(data, d)
}

/// Time weight making the curve-matching metric Euclidean in a trace plot
/// with horizontal:vertical aspect ratio `h:v`.
pub fn aspect_ratio_lambda(s: &Series, h: f64, v: f64) -> Result<f64> {
    let y = s
        .scalar()
        .ok_or_else(|| Error::InvalidArgument("aspect-ratio heuristic needs a scalar series".into()))?;
    if y.len() < 2 {
        return Err(Error::InvalidArgument("aspect-ratio heuristic needs T >= 2".into()));
    }
    if !(h > 0.0 && v > 0.0) {
        return Err(Error::InvalidArgument("aspect ratio sides must be positive".into()));
    }
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        return Err(Error::Degenerate("constant series has no vertical range".into()));
    }
    Ok((hi - lo) / v * (h / y.len() as f64))
}

/// Delay reconstruction `(y_t, y_{t−τ1}, …, y_{t−τk})` for
/// `t = τk+1, τk+1+stride, … ≤ T`.
pub fn delay_embed(s: &Series, lags: &[usize], stride: usize) -> Result<PointCloud> {
    Embedding::Delay {
        lags: lags.to_vec(),
        stride,
    }
    .validate()?;
    let tau_k = *lags.last().unwrap();
    let t_len = s.len();
    if t_len <= tau_k {
        return Err(Error::InvalidArgument(format!(
            "series of length {t_len} is too short for lag {tau_k}"
        )));
    }
    let dy = s.dim();
    let d = (lags.len() + 1) * dy;
    let count = (t_len - tau_k).div_ceil(stride);
    let mut data = Vec::with_capacity(count * d);
    let mut t = tau_k + 1;
    while t <= t_len {
        data.extend_from_slice(s.at(t));
        for &tau in lags {
            data.extend_from_slice(s.at(t - tau));
        }
        t += stride;
    }
    Ok(PointCloud::from_raw(data, d))
}

/// `w_t = (y_t − φ y_{t−1}) / σ` for `t = 2..=T`.
pub fn ar1_residuals(s: &Series, phi: f64, sigma: f64) -> Result<PointCloud> {
    let y = s
        .scalar()
        .ok_or_else(|| Error::InvalidArgument("AR(1) residuals need a scalar series".into()))?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument("AR(1) residuals need T >= 2".into()));
    }
    let w: Vec<f64> = y.windows(2).map(|p| (p[1] - phi * p[0]) / sigma).collect();
    PointCloud::new(w, 1)
}

/// `w_t = (y_t − A cos(2πωt + φ)) / σ` for `t = 1..=T`.
pub fn cosine_residuals(s: &Series, omega: f64, phase: f64, sigma: f64, amp: f64) -> Result<PointCloud> {
    let y = s
        .scalar()
        .ok_or_else(|| Error::InvalidArgument("cosine residuals need a scalar series".into()))?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    let w: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = (i + 1) as f64;
            (v - amp * (2.0 * PI * omega * t + phase).cos()) / sigma
        })
        .collect();
    PointCloud::new(w, 1)
}

/// Residual reconstruction with θ in the model's declared coordinates.
pub fn residual_reconstruct(s: &Series, model: ResidualModel, theta: &[f64]) -> Result<PointCloud> {
    match model {
        ResidualModel::Ar1 => {
            let [phi, log_sigma] = theta else {
                return Err(Error::InvalidArgument("AR(1) residuals need θ = (φ, log σ)".into()));
            };
            ar1_residuals(s, *phi, log_sigma.exp())
        }
        ResidualModel::Cosine => {
            let [omega, phase, log_sigma, log_amp] = theta else {
                return Err(Error::InvalidArgument(
                    "cosine residuals need θ = (ω, φ, log σ, log A)".into(),
                ));
            };
            cosine_residuals(s, *omega, *phase, log_sigma.exp(), log_amp.exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Series {
        Series::from_values(v).unwrap()
    }

    #[test]
    fn curve_points() {
        let c = curve_embed(&s(&[5.0, 7.0]));
        assert_eq!(c, PointCloud::from_rows(&[[1.0, 5.0], [2.0, 7.0]]).unwrap());
    }

    #[test]
    fn aspect_ratio_examples() {
        let mut v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin()).collect();
        v[3] = -1.0;
        v[7] = 1.0;
        let series = s(&v);
        assert!((aspect_ratio_lambda(&series, 1.0, 1.0).unwrap() - 0.02).abs() < 1e-15);
        assert!((aspect_ratio_lambda(&series, 100.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(aspect_ratio_lambda(&s(&[3.0, 3.0, 3.0]), 1.0, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn delay_examples() {
        let c = delay_embed(&s(&[1.0, 2.0, 3.0, 4.0]), &[1], 1).unwrap();
        assert_eq!(c, PointCloud::from_rows(&[[2.0, 1.0], [3.0, 2.0], [4.0, 3.0]]).unwrap());
        let c = delay_embed(&s(&[1.0, 2.0, 3.0, 4.0, 5.0]), &[1], 2).unwrap();
        assert_eq!(c, PointCloud::from_rows(&[[2.0, 1.0], [4.0, 3.0]]).unwrap());
        let c = delay_embed(&s(&[1.0, 2.0, 3.0, 4.0, 5.0]), &[1, 3], 1).unwrap();
        assert_eq!(c, PointCloud::from_rows(&[[4.0, 3.0, 1.0], [5.0, 4.0, 2.0]]).unwrap());
    }

    #[test]
    fn delay_errors() {
        assert!(delay_embed(&s(&[1.0, 2.0]), &[2], 1).is_err());
        assert!(delay_embed(&s(&[1.0, 2.0, 3.0]), &[2, 1], 1).is_err());
        assert!(delay_embed(&s(&[1.0, 2.0, 3.0]), &[1], 0).is_err());
        assert!(delay_embed(&s(&[1.0, 2.0, 3.0]), &[0], 1).is_err());
    }

    #[test]
    fn delay_point_count() {
        for t in 2..30usize {
            let v: Vec<f64> = (0..t).map(|i| i as f64).collect();
            for lag in 1..t {
                for stride in 1..5 {
                    let c = delay_embed(&s(&v), &[lag], stride).unwrap();
                    assert_eq!(c.len(), (t - lag).div_ceil(stride));
                }
            }
        }
    }

    #[test]
    fn residual_examples() {
        let w = residual_reconstruct(&s(&[1.0, 2.0, 3.0]), ResidualModel::Ar1, &[0.0, 0.0]).unwrap();
        assert_eq!(w.as_slice(), &[2.0, 3.0]);
        let y = [0.3, -1.2, 4.0];
        let w = residual_reconstruct(&s(&y), ResidualModel::Cosine, &[0.01, 0.5, 0.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(w.as_slice(), &y);
        assert!(ar1_residuals(&s(&y), 0.5, 0.0).is_err());
        assert!(cosine_residuals(&s(&y), 0.1, 0.0, -1.0, 1.0).is_err());
        assert!(matches!(ResidualModel::parse("arma"), Err(Error::Unknown(_))));
    }

    #[test]
    fn csv_round_trip() {
        let series = s(&[1.5, -2.25, 1e-7]);
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,y1\n1,"));
        assert_eq!(Series::read_csv(&buf[..]).unwrap(), series);
        assert!(Series::read_csv(&b"t,y1\n2,1.0\n"[..]).is_err());
    }
}
