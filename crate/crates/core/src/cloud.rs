//! Empirical measures stored as dense row-major point matrices.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// `n` points in `d` dimensions, each carrying implicit weight `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer, checking every invariant.
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if data.len() % d != 0 {
            return Err(Error::RaggedRows {
                row: data.len() / d,
                expected: d,
                found: data.len() % d,
            });
        }
        let cloud = Self {
            n: data.len() / d,
            data,
            d,
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyCloud)?;
        let d = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: d,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, d)
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    /// Skips validation. Callers guarantee finiteness and shape.
    pub(crate) fn from_raw(data: Vec<f64>, d: usize) -> Self {
        debug_assert!(d > 0 && !data.is_empty() && data.len() % d == 0);
        Self {
            n: data.len() / d,
            data,
            d,
        }
    }

    /// Returns the first violated invariant, if any.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyCloud);
        }
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / self.d,
                col: pos % self.d,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows picked by `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> PointCloud {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        PointCloud::from_raw(data, self.d)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// Sample covariance with the `1/(n-1)` normalization (`1/n` when n = 1).
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let m = self.mean();
        let mut c = vec![vec![0.0; self.d]; self.d];
        for r in self.rows() {
            for a in 0..self.d {
                for b in 0..self.d {
                    c[a][b] += (r[a] - m[a]) * (r[b] - m[b]);
                }
            }
        }
        let denom = (self.n.max(2) - 1) as f64;
        c.iter_mut().flatten().for_each(|v| *v /= denom);
        c
    }

    /// Per-dimension (min, max).
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.d];
        for r in self.rows() {
            for (lim, &v) in b.iter_mut().zip(r) {
                lim.0 = lim.0.min(v);
                lim.1 = lim.1.max(v);
            }
        }
        b
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for r in self.rows() {
            let line: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV format written by [`PointCloud::write_csv`]. The header
    /// row is mandatory; its names are not interpreted.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header row".into()))??;
        let d = header.split(',').count();
        let mut data = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields = parse_row(&line, i + 2)?;
            if fields.len() != d {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: d,
                    found: fields.len(),
                });
            }
            data.extend(fields);
        }
        Self::new(data, d)
    }
}

pub(crate) fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {lineno}: {f:?}: {e}")))
        })
        .collect()
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
