//! Hilbert space-filling curve ordering.
//!
//! Points are rescaled affinely into a bounding box, quantised onto a
//! `2^bits` grid per axis and encoded with Skilling's transpose algorithm
//! ("Programming the Hilbert curve", 2004). The resulting index fits a
//! `u128`, so `bits · d ≤ 128`.

use std::cmp::Ordering;

use super::{check_pair, DistanceResult, Method};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metric::GroundMetric;

pub const DEFAULT_HILBERT_BITS: u32 = 16;

const BOX_MARGIN: f64 = 1e-9;

/// Per-axis `(lo, hi)` normalisation box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    limits: Vec<(f64, f64)>,
}

impl BoundingBox {
    pub fn new(limits: Vec<(f64, f64)>) -> Result<Self> {
        if limits.is_empty() {
            return Err(Error::InvalidArgument("bounding box needs at least one axis".into()));
        }
        for &(lo, hi) in &limits {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::InvalidArgument(format!("invalid box axis ({lo}, {hi})")));
            }
        }
        Ok(Self { limits })
    }

    /// Joint extent of all clouds, widened by a small relative margin.
    /// Zero-width axes are kept degenerate.
    pub fn covering(clouds: &[&PointCloud]) -> Result<Self> {
        let first = clouds.first().ok_or(Error::EmptyCloud)?;
        let d = first.dim();
        let mut lim = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for c in clouds {
            if c.dim() != d {
                return Err(Error::DimensionMismatch(d, c.dim()));
            }
            for (l, b) in lim.iter_mut().zip(c.bounds()) {
                l.0 = l.0.min(b.0);
                l.1 = l.1.max(b.1);
            }
        }
        for l in lim.iter_mut() {
            let w = l.1 - l.0;
            if w > 0.0 {
                l.0 -= BOX_MARGIN * w;
                l.1 += BOX_MARGIN * w;
            }
        }
        Self::new(lim)
    }

    pub fn dim(&self) -> usize {
        self.limits.len()
    }

    pub fn limits(&self) -> &[(f64, f64)] {
        &self.limits
    }

    /// Grid cell of `v` along `axis` on a `2^bits` grid. Degenerate axes map to
    /// the middle cell; values outside the box are clamped.
    #[inline]
    fn cell(&self, axis: usize, v: f64, bits: u32) -> u32 {
        let (lo, hi) = self.limits[axis];
        let side = 1u64 << bits;
        if hi <= lo {
            return (side / 2) as u32;
        }
        let t = ((v - lo) / (hi - lo) * side as f64).floor();
        t.clamp(0.0, (side - 1) as f64) as u32
    }
}

fn axes_to_transpose(x: &mut [u32], bits: u32) {
    let n = x.len();
    let m = 1u32 << (bits - 1);
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..n {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    for i in 1..n {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    q = m;
    while q > 1 {
        if x[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in x.iter_mut() {
        *v ^= t;
    }
}

/// Hilbert index of integer grid coordinates, each `< 2^bits`.
pub(crate) fn encode_cells(cells: &mut [u32], bits: u32) -> u128 {
    if cells.len() == 1 {
        return cells[0] as u128;
    }
    axes_to_transpose(cells, bits);
    let mut h: u128 = 0;
    for b in (0..bits).rev() {
        for &c in cells.iter() {
            h = (h << 1) | ((c >> b) & 1) as u128;
        }
    }
    h
}

fn check_bits(d: usize, bits: u32) -> Result<()> {
    if bits == 0 || bits > 32 || bits as usize * d > 128 {
        return Err(Error::InvalidArgument(format!(
            "Hilbert index needs 1 <= bits <= 32 and bits·d <= 128 (bits={bits}, d={d})"
        )));
    }
    Ok(())
}

/// Bits per axis used by default: 16, reduced so that the index fits 128 bits.
pub(crate) fn default_bits(d: usize) -> u32 {
    DEFAULT_HILBERT_BITS.min((128 / d.max(1)) as u32).max(1)
}

/// Position of the grid cell containing `point` along the order-`bits` Hilbert curve.
pub fn hilbert_index(point: &[f64], bbox: &BoundingBox, bits: u32) -> Result<u128> {
    if point.len() != bbox.dim() {
        return Err(Error::DimensionMismatch(point.len(), bbox.dim()));
    }
    check_bits(point.len(), bits)?;
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: point.iter().position(|v| !v.is_finite()).unwrap() });
    }
    let mut cells: Vec<u32> = point
        .iter()
        .enumerate()
        .map(|(a, &v)| bbox.cell(a, v, bits))
        .collect();
    Ok(encode_cells(&mut cells, bits))
}

/// Row indices of `x` in Hilbert order. Ties on the curve index fall back to
/// lexicographic coordinates, then to row number.
pub fn hilbert_order(x: &PointCloud, bbox: &BoundingBox, bits: u32) -> Result<Vec<usize>> {
    if x.dim() != bbox.dim() {
        return Err(Error::DimensionMismatch(x.dim(), bbox.dim()));
    }
    check_bits(x.dim(), bits)?;
    let mut cells = vec![0u32; x.dim()];
    let keys: Vec<u128> = x
        .rows()
        .map(|r| {
            for (a, (c, &v)) in cells.iter_mut().zip(r).enumerate() {
                *c = bbox.cell(a, v, bits);
            }
            encode_cells(&mut cells, bits)
        })
        .collect();
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_unstable_by(|&a, &b| {
        keys[a]
            .cmp(&keys[b])
            .then_with(|| lex_cmp(x.row(a), x.row(b)))
            .then(a.cmp(&b))
    });
    Ok(idx)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.total_cmp(v) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Hilbert distance using the joint bounding box of `x` and `y`.
pub fn hilbert_distance(x: &PointCloud, y: &PointCloud, m: &GroundMetric) -> Result<DistanceResult> {
    check_pair(x, y, m, true)?;
    let bbox = BoundingBox::covering(&[x, y])?;
    hilbert_distance_in_box(x, y, m, &bbox)
}

/// Hilbert distance with a caller-supplied normalisation box. Sharing one box
/// across several clouds makes the distance a metric among them.
pub fn hilbert_distance_in_box(
    x: &PointCloud,
    y: &PointCloud,
    m: &GroundMetric,
    bbox: &BoundingBox,
) -> Result<DistanceResult> {
    check_pair(x, y, m, true)?;
    let bits = default_bits(x.dim());
    let ox = hilbert_order(x, bbox, bits)?;
    let oy = hilbert_order(y, bbox, bits)?;
    let mut sigma = vec![0usize; x.len()];
    for (&i, &j) in ox.iter().zip(&oy) {
        sigma[i] = j;
    }
    Ok(DistanceResult::from_assignment(x, y, m, sigma, Method::Hilbert, 0))
}
