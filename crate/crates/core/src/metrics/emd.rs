//! Earth Mover's distance via an exact assignment solve.
//!
//! Jonker-Volgenant shortest augmenting paths with potentials, O(n^3);
//! exact optimum for real-valued costs. The hard size cap keeps the cubic
//! cost honest at desk scale.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

use super::DistanceReport;

pub const EMD_DEFAULT_CAP: usize = 2048;

/// Minimum-cost perfect matching on a square cost matrix (row-major).
/// Returns the column assigned to each row and the total cost.
pub fn solve_assignment(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    // 1-based potentials/links; p[j] is the row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; n];
    let mut total = 0.0;
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
            total += cost[(p[j] - 1) * n + (j - 1)];
        }
    }
    (assignment, total)
}

/// Mean cost of the optimal one-to-one matching between two equal-size
/// clouds. No per-point vector is defined; the report statistics come
/// from the matched pair distances.
pub fn earth_movers(query: &PointCloud, reference: &PointCloud, cap: usize) -> Result<DistanceReport> {
    if query.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("earth mover's needs two non-empty clouds"));
    }
    if query.len() != reference.len() {
        return Err(Error::SizeMismatch {
            left: query.len(),
            right: reference.len(),
        });
    }
    if query.len() > cap {
        return Err(Error::TooLarge {
            size: query.len(),
            cap,
        });
    }
    let n = query.len();
    let mut cost = vec![0.0f64; n * n];
    for (i, p) in query.points.iter().enumerate() {
        for (j, q) in reference.points.iter().enumerate() {
            cost[i * n + j] = (p - q).norm();
        }
    }
    let (assignment, total) = solve_assignment(&cost, n);
    let matched: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .collect();
    let scalar = total / n as f64;
    Ok(DistanceReport::new(None, &matched, scalar))
}
