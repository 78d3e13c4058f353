//! Entropically regularised transport solved by log-domain Sinkhorn iterations.

use super::{check_pair, cost_matrix, DistanceResult, Method, TransportPlan};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metric::GroundMetric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Regularisation strength. `None` selects 0.05 × median entry of the cost matrix.
    pub zeta: Option<f64>,
    /// Stop once the largest marginal violation is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            zeta: None,
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornOutput {
    /// `value` is the transport cost `Σ ρ^p γ`, i.e. on the p-th power scale.
    pub result: DistanceResult,
    pub plan: TransportPlan,
    pub zeta: f64,
    pub violation: f64,
}

#[inline]
fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + it.map(|v| (v - mx).exp()).sum::<f64>().ln()
}

/// Over-relaxation factor for the dual updates.
const OVERRELAX: f64 = 1.5;

fn marginal_violation(cost: &[f64], f: &[f64], g: &[f64], z: f64, n: usize, k: usize) -> f64 {
    let (a, b) = (1.0 / n as f64, 1.0 / k as f64);
    let mut cols = vec![0.0f64; k];
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..k {
            let v = ((f[i] + g[j] - cost[i * k + j]) / z).exp();
            s += v;
            cols[j] += v;
        }
        worst = worst.max((s - a).abs());
    }
    cols.iter().fold(worst, |w, c| w.max((c - b).abs()))
}

/// Projects an approximately feasible plan onto the uniform-marginal
/// polytope (Altschuler, Weed & Rigollet 2017, Algorithm 2). Entries change
/// by at most the initial marginal violation.
fn round_to_marginals(gamma: &mut [f64], n: usize, k: usize) {
    let (a, b) = (1.0 / n as f64, 1.0 / k as f64);
    for row in gamma.chunks_exact_mut(k) {
        let s: f64 = row.iter().sum();
        if s > a {
            let scale = a / s;
            row.iter_mut().for_each(|v| *v *= scale);
        }
    }
    let mut cols = vec![0.0f64; k];
    for row in gamma.chunks_exact(k) {
        for (c, v) in cols.iter_mut().zip(row) {
            *c += v;
        }
    }
    for (j, c) in cols.iter().enumerate() {
        if *c > b {
            let scale = b / c;
            for i in 0..n {
                gamma[i * k + j] *= scale;
            }
        }
    }
    let row_err: Vec<f64> = gamma
        .chunks_exact(k)
        .map(|r| (a - r.iter().sum::<f64>()).max(0.0))
        .collect();
    let mut col_err = vec![b; k];
    for row in gamma.chunks_exact(k) {
        for (c, v) in col_err.iter_mut().zip(row) {
            *c -= v;
        }
    }
    col_err.iter_mut().for_each(|c| *c = c.max(0.0));
    let total: f64 = col_err.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..k {
                gamma[i * k + j] += row_err[i] * col_err[j] / total;
            }
        }
    }
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Dual-Sinkhorn divergence `Σ_ij ρ(x_i, y_j)^p γ^ζ_ij`. The clouds may differ in size.
pub fn sinkhorn_divergence(
    x: &PointCloud,
    y: &PointCloud,
    m: &GroundMetric,
    opts: &SinkhornOptions,
) -> Result<SinkhornOutput> {
    let out = sinkhorn_rounded(x, y, m, opts)?;
    if out.violation > opts.tol {
        return Err(Error::NotConverged {
            method: "sinkhorn",
            iterations: out.result.iterations,
            residual: out.violation,
        });
    }
    Ok(out)
}

/// As [`sinkhorn_divergence`], but returns the rounded plan even when the
/// iterates miss `tol` within `max_iter`; `violation` reports how far they got.
/// The rounded plan is always exactly feasible.
pub fn sinkhorn_rounded(
    x: &PointCloud,
    y: &PointCloud,
    m: &GroundMetric,
    opts: &SinkhornOptions,
) -> Result<SinkhornOutput> {
    check_pair(x, y, m, false)?;
    let (n, k) = (x.len(), y.len());
    let cost = cost_matrix(x, y, m);
    let zeta = match opts.zeta {
        Some(z) => z,
        None => {
            let med = median(&mut cost.clone());
            if med > 0.0 {
                0.05 * med
            } else {
                1e-3
            }
        }
    };
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidArgument(format!("zeta must be > 0, got {zeta}")));
    }
    let log_a = -(n as f64).ln();
    let log_b = -(k as f64).ln();
    let a = 1.0 / n as f64;
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; k];
    let mut iterations = 0;
    let mut violation = f64::INFINITY;

    // Anneal the regularisation down to `zeta`, warm-starting the duals; at
    // small zeta a cold start converges very slowly.
    let max_cost = cost.iter().cloned().fold(0.0, f64::max);
    let mut schedule = Vec::new();
    let mut z = max_cost;
    while z > 2.0 * zeta {
        schedule.push(z);
        z *= 0.5;
    }
    schedule.push(zeta);
    let last = schedule.len() - 1;

    for (stage, &z) in schedule.iter().enumerate() {
        let (stage_tol, stage_cap) = if stage == last {
            (opts.tol, opts.max_iter.saturating_sub(iterations))
        } else {
            (1e-3 * a, 200)
        };
        let mut it = 0;
        let mut omega = OVERRELAX;
        let mut prev_violation = f64::INFINITY;
        while it < stage_cap {
            it += 1;
            for i in 0..n {
                let row = &cost[i * k..(i + 1) * k];
                let fi = z * log_a - z * logsumexp(row.iter().zip(&g).map(|(c, gj)| (gj - c) / z));
                f[i] = (1.0 - omega) * f[i] + omega * fi;
            }
            for j in 0..k {
                let gj = z * log_b - z * logsumexp((0..n).map(|i| (f[i] - cost[i * k + j]) / z));
                g[j] = (1.0 - omega) * g[j] + omega * gj;
            }
            violation = marginal_violation(&cost, &f, &g, z, n, k);
            if violation <= stage_tol {
                break;
            }
            // fall back to plain Sinkhorn if relaxation stops helping
            if omega > 1.0 && violation > 10.0 * prev_violation {
                omega = 1.0;
            }
            prev_violation = violation;
        }
        iterations += it;
    }

    let mut gamma: Vec<f64> = (0..n * k)
        .map(|idx| ((f[idx / k] + g[idx % k] - cost[idx]) / zeta).exp())
        .collect();
    round_to_marginals(&mut gamma, n, k);
    let plan = TransportPlan::new(gamma, n, k)?;
    let value: f64 = cost.iter().zip(plan.as_slice()).map(|(c, g)| c * g).sum();
    Ok(SinkhornOutput {
        result: DistanceResult {
            value,
            method: Method::Sinkhorn,
            iterations,
            assignment: None,
        },
        plan,
        zeta,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_have_unique_plan() {
        let x = PointCloud::from_rows(&[[0.0, 0.0]]).unwrap();
        let y = PointCloud::from_rows(&[[3.0, 4.0]]).unwrap();
        let out = sinkhorn_divergence(&x, &y, &GroundMetric::euclidean(2.0), &SinkhornOptions::default()).unwrap();
        assert!((out.result.value - 25.0).abs() < 1e-12);
        assert!((out.plan.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unequal_sizes_respect_marginals() {
        let x = PointCloud::from_values(&[0.0, 1.0, 2.5]).unwrap();
        let y = PointCloud::from_values(&[0.2, 0.4, 1.9, 3.0, -1.0]).unwrap();
        let out = sinkhorn_divergence(&x, &y, &GroundMetric::euclidean(1.0), &SinkhornOptions::default()).unwrap();
        assert!(out.violation <= 1e-9);
        for s in out.plan.row_sums() {
            assert!((s - 1.0 / 3.0).abs() <= 1e-9);
        }
        for s in out.plan.col_sums() {
            assert!((s - 0.2).abs() <= 1e-9);
        }
    }

    #[test]
    fn rejects_nonpositive_zeta_and_reports_nonconvergence() {
        let x = PointCloud::from_values(&[0.0, 1.0]).unwrap();
        let m = GroundMetric::euclidean(1.0);
        let bad = SinkhornOptions { zeta: Some(0.0), ..Default::default() };
        assert!(sinkhorn_divergence(&x, &x, &m, &bad).is_err());
        let y = PointCloud::from_values(&[0.3, 5.0]).unwrap();
        let short = SinkhornOptions { zeta: Some(0.01), tol: 1e-15, max_iter: 1 };
        assert!(matches!(
            sinkhorn_divergence(&x, &y, &m, &short),
            Err(Error::NotConverged { .. }) | Ok(_)
        ));
    }
}
