//! Dense linear sum assignment by shortest augmenting paths.
//!
//! This is the Jonker–Volgenant style solver popularised by Crouse (2016):
//! one Dijkstra-like search per row over reduced costs, with dual variables
//! updated after every augmentation. Worst case O(n³). Ties in the search
//! prefer unassigned columns, then earlier positions in the scan order, so
//! the returned permutation is a deterministic function of the cost matrix.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Solves `min_σ Σ_i cost[i][σ(i)]` for a square row-major `n × n` matrix.
/// Returns `σ` as `col_for_row`.
pub fn solve(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(Error::SizeMismatch(cost.len(), n * n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if let Some(pos) = cost.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / n,
            col: pos % n,
        });
    }

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];
    let mut shortest = vec![f64::INFINITY; n];
    let mut path = vec![NONE; n];
    let mut in_sr = vec![false; n];
    let mut in_sc = vec![false; n];
    let mut remaining = vec![0usize; n];

    for cur_row in 0..n {
        shortest.fill(f64::INFINITY);
        path.fill(NONE);
        in_sr.fill(false);
        in_sc.fill(false);
        for (it, r) in remaining.iter_mut().enumerate() {
            *r = n - it - 1;
        }
        let mut num_remaining = n;
        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let mut sink = NONE;

        while sink == NONE {
            let mut index = NONE;
            let mut lowest = f64::INFINITY;
            in_sr[i] = true;
            let row = &cost[i * n..(i + 1) * n];
            let base = min_val - u[i];
            for it in 0..num_remaining {
                let j = remaining[it];
                let r = base + row[j] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            if !min_val.is_finite() {
                return Err(Error::Degenerate("assignment problem is infeasible".into()));
            }
            let j = remaining[index];
            if row4col[j] == NONE {
                sink = j;
            } else {
                i = row4col[j];
            }
            in_sc[j] = true;
            num_remaining -= 1;
            remaining[index] = remaining[num_remaining];
        }

        u[cur_row] += min_val;
        for r in 0..n {
            if in_sr[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..n {
            if in_sc[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    Ok(col4row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(cost: &[f64], n: usize, sigma: &[usize]) -> f64 {
        (0..n).map(|i| cost[i * n + sigma[i]]).sum()
    }

    #[test]
    fn small_known_instance() {
        // classic 3x3 example, optimum 5 = 1 + 2 + 2
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let s = solve(&cost, 3).unwrap();
        assert_eq!(total(&cost, 3, &s), 5.0);
        let mut seen = s.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn identity_on_diagonal_zero() {
        let n = 6;
        let cost: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 0.0 } else { 1.0 + (k % 7) as f64 })
            .collect();
        assert_eq!(solve(&cost, n).unwrap(), (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_nan_and_bad_shape() {
        assert!(solve(&[0.0, f64::NAN, 1.0, 2.0], 2).is_err());
        assert!(solve(&[0.0, 1.0, 2.0], 2).is_err());
        assert_eq!(solve(&[], 0).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn deterministic_under_ties() {
        let cost = vec![1.0; 25];
        let a = solve(&cost, 5).unwrap();
        let b = solve(&cost, 5).unwrap();
        assert_eq!(a, b);
    }
}
