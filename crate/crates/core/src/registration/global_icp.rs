//! Joint multiview alignment: one least-squares problem over all poses.
//!
//! Each iteration rebuilds point-to-plane correspondences for every
//! overlapping cloud pair at the current poses, then solves a single
//! damped Gauss-Newton system over all pose twists simultaneously with
//! pose 0 held fixed. Clouds are voxel-downsampled up front.

use nalgebra::{DMatrix, DVector, Point3, Vector3, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{voxel_downsample, KdTree, PointCloud, RigidTransform};

use super::icp::IcpParams;
use super::se3;

/// Pairs with fewer correspondences than this do not constrain the system.
const MIN_PAIR_CORRESPONDENCES: usize = 10;

struct PairConstraint {
    source: usize,
    target: usize,
    /// (source point index, target point index)
    matches: Vec<(usize, usize)>,
}

/// Simultaneous multiview registration; returns refined poses in the same
/// world frame as `init_poses` (pose 0 is the gauge anchor and never
/// moves).
pub fn global_icp(
    clouds: &[PointCloud],
    init_poses: &[RigidTransform],
    params: &IcpParams,
    voxel_size: f64,
) -> Result<Vec<RigidTransform>> {
    params.validate()?;
    if clouds.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "global ICP needs at least 2 clouds, got {}",
            clouds.len()
        )));
    }
    if clouds.len() != init_poses.len() {
        return Err(Error::SizeMismatch {
            left: clouds.len(),
            right: init_poses.len(),
        });
    }
    if !(voxel_size > 0.0) {
        return Err(Error::InvalidParameter("voxel_size must be > 0".into()));
    }

    let reduced: Vec<PointCloud> = clouds
        .iter()
        .map(|c| {
            let mut r = voxel_downsample(c, voxel_size)?;
            if r.normals.is_none() {
                let k = 30.min(r.len()).max(3);
                r = crate::geometry::estimate_normals(&r, k, None)?;
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let trees: Vec<KdTree> = reduced
        .iter()
        .map(KdTree::build)
        .collect::<Result<_>>()?;

    let n = clouds.len();
    let mut poses: Vec<RigidTransform> = init_poses.to_vec();
    let mut prev_rmse = f64::INFINITY;

    for iteration in 0..params.max_iterations {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let constraints: Vec<PairConstraint> = pairs
            .par_iter()
            .filter_map(|&(i, j)| {
                let rel = poses[j].inverse().compose(&poses[i]);
                let mut matches = Vec::new();
                for (s, p) in reduced[i].points.iter().enumerate() {
                    let moved = rel.transform_point(p);
                    let (t, dist) = trees[j].nearest(&moved);
                    if dist <= params.max_correspondence_distance {
                        matches.push((s, t));
                    }
                }
                (matches.len() >= MIN_PAIR_CORRESPONDENCES).then_some(PairConstraint {
                    source: i,
                    target: j,
                    matches,
                })
            })
            .collect();

        if iteration == 0 {
            for cloud in 0..n {
                let connected = constraints
                    .iter()
                    .any(|c| c.source == cloud || c.target == cloud);
                if !connected {
                    return Err(Error::DisconnectedSet(cloud));
                }
            }
        }
        if constraints.is_empty() {
            return Err(Error::NoOverlap(params.max_correspondence_distance));
        }

        // Frozen local-frame geometry for this iteration.
        let mut residual_terms: Vec<(usize, usize, Point3<f64>, Point3<f64>, Vector3<f64>)> =
            Vec::new();
        for c in &constraints {
            let normals = reduced[c.target].normals.as_ref().unwrap();
            for &(s, t) in &c.matches {
                residual_terms.push((
                    c.source,
                    c.target,
                    reduced[c.source].points[s],
                    reduced[c.target].points[t],
                    normals[t],
                ));
            }
        }

        let objective = |trial: &[RigidTransform]| -> f64 {
            residual_terms
                .iter()
                .map(|&(i, j, p, q, n_q)| {
                    let x_i = trial[i].transform_point(&p);
                    let x_j = trial[j].transform_point(&q);
                    let n = trial[j].rotation * n_q;
                    let r = n.dot(&(x_i - x_j));
                    r * r
                })
                .sum()
        };

        let vars = 6 * (n - 1);
        let mut h = DMatrix::<f64>::zeros(vars, vars);
        let mut g = DVector::<f64>::zeros(vars);
        for &(i, j, p, q, n_q) in &residual_terms {
            let x_i = poses[i].transform_point(&p);
            let x_j = poses[j].transform_point(&q);
            let n = poses[j].rotation * n_q;
            let r = n.dot(&(x_i - x_j));
            let j_i = {
                let w = x_i.coords.cross(&n);
                Vector6::new(w.x, w.y, w.z, n.x, n.y, n.z)
            };
            let j_j = {
                let w = x_j.coords.cross(&n);
                -Vector6::new(w.x, w.y, w.z, n.x, n.y, n.z)
            };
            let blocks = [(i, j_i), (j, j_j)];
            for (node_a, ja) in blocks {
                if node_a == 0 {
                    continue;
                }
                let row = 6 * (node_a - 1);
                for k in 0..6 {
                    g[row + k] += ja[k] * r;
                }
                for (node_b, jb) in blocks {
                    if node_b == 0 {
                        continue;
                    }
                    let col = 6 * (node_b - 1);
                    for rr in 0..6 {
                        for cc in 0..6 {
                            h[(row + rr, col + cc)] += ja[rr] * jb[cc];
                        }
                    }
                }
            }
        }

        let before = objective(&poses);
        // Rank-revealing solve: zero step along eigendirections with
        // negligible curvature (gauge freedoms, extruded geometry), so
        // noise gradients cannot drive null-space drift.
        let eigen = h.clone().symmetric_eigen();
        let max_eval = eigen.eigenvalues.amax();
        if max_eval <= 0.0 {
            break;
        }
        let cutoff = 1e-9 * max_eval;
        let mut delta = DVector::<f64>::zeros(vars);
        for k in 0..vars {
            let lambda = eigen.eigenvalues[k];
            if lambda > cutoff {
                let v = eigen.eigenvectors.column(k);
                delta += v * (-(v.dot(&g)) / lambda);
            }
        }

        if delta.amax() < 1e-12 {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..24 {
            let mut trial = poses.clone();
            for k in 1..n {
                let xi = Vector6::from_fn(|r_, _| delta[6 * (k - 1) + r_] * alpha);
                trial[k] = se3::exp(&xi).compose(&trial[k]).renormalized();
            }
            if objective(&trial) <= before {
                poses = trial;
                accepted = true;
                break;
            }
            alpha /= 2.0;
        }
        if !accepted {
            break;
        }

        let count: usize = residual_terms.len();
        let rmse = (objective(&poses) / count as f64).sqrt();
        let rel = (prev_rmse - rmse).abs() / prev_rmse.max(1e-300);
        if rel < params.convergence_rel_change {
            break;
        }
        prev_rmse = rmse;
    }

    Ok(poses)
}
