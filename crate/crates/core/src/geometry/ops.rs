//! Bulk point-cloud operations: downsampling, normals, filtering, crop.
//!
//! Operations parallelize over points where profitable but always produce
//! the same result as the sequential definition (order-preserving maps,
//! deterministic reductions).

use std::collections::HashMap;

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{sym_eigen3, Aabb, KdTree, PointCloud, RigidTransform};

/// Voxel-grid downsampling anchored at the coordinate origin: every point
/// falls in voxel `floor(p / voxel_size)` and each occupied voxel emits the
/// centroid of its points. Output voxels appear in first-occupancy order.
///
/// Normals are averaged and renormalized; covariances are averaged.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PointCloud> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "voxel_size must be positive and finite, got {voxel_size}"
        )));
    }

    struct Acc {
        sum: Vector3<f64>,
        normal_sum: Vector3<f64>,
        cov_sum: Matrix3<f64>,
        first: usize,
        count: usize,
    }

    let mut slots: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut accs: Vec<Acc> = Vec::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let key = (
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        );
        let slot = *slots.entry(key).or_insert_with(|| {
            accs.push(Acc {
                sum: Vector3::zeros(),
                normal_sum: Vector3::zeros(),
                cov_sum: Matrix3::zeros(),
                first: i,
                count: 0,
            });
            accs.len() - 1
        });
        let acc = &mut accs[slot];
        acc.sum += p.coords;
        acc.count += 1;
        if let Some(normals) = &cloud.normals {
            acc.normal_sum += normals[i];
        }
        if let Some(covs) = &cloud.covariances {
            acc.cov_sum += covs[i];
        }
    }

    let points = accs
        .iter()
        .map(|a| Point3::from(a.sum / a.count as f64))
        .collect();
    let normals = cloud.normals.as_ref().map(|normals| {
        accs.iter()
            .map(|a| {
                let norm = a.normal_sum.norm();
                if norm > 1e-12 {
                    a.normal_sum / norm
                } else {
                    // Opposed normals cancelled; fall back to the first
                    // point's normal so the invariant |n| = 1 holds.
                    normals[a.first]
                }
            })
            .collect()
    });
    let covariances = cloud
        .covariances
        .as_ref()
        .map(|_| accs.iter().map(|a| a.cov_sum / a.count as f64).collect());

    Ok(PointCloud {
        points,
        normals,
        covariances,
    })
}

/// Per-point normal estimation from the k-nearest-neighbor covariance
/// (eigenvector of the smallest eigenvalue). The neighborhood includes the
/// point itself.
///
/// With a `viewpoint`, normals are flipped so `n . (viewpoint - p) >= 0`;
/// without one the sign follows the deterministic eigen-solver convention
/// and is ambiguous up to orientation.
pub fn estimate_normals(
    cloud: &PointCloud,
    k: usize,
    viewpoint: Option<Point3<f64>>,
) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "normal estimation needs k >= 3, got {k}"
        )));
    }
    if cloud.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            have: cloud.len(),
        });
    }
    if cloud.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            have: cloud.len(),
        });
    }
    let tree = KdTree::build(cloud)?;
    let normals: Vec<Vector3<f64>> = cloud
        .points
        .par_iter()
        .map(|p| {
            let neighbors = tree.knn(p, k);
            let mut mean = Vector3::zeros();
            for (i, _) in &neighbors {
                mean += cloud.points[*i].coords;
            }
            mean /= neighbors.len() as f64;
            let mut cov = Matrix3::zeros();
            for (i, _) in &neighbors {
                let d = cloud.points[*i].coords - mean;
                cov += d * d.transpose();
            }
            cov /= neighbors.len() as f64;
            let (_, evecs) = sym_eigen3(&cov);
            let mut n = evecs[0];
            if let Some(vp) = viewpoint {
                if n.dot(&(vp - p)) < 0.0 {
                    n = -n;
                }
            }
            n
        })
        .collect();
    Ok(PointCloud {
        points: cloud.points.clone(),
        normals: Some(normals),
        covariances: cloud.covariances.clone(),
    })
}

/// Removes points whose mean distance to their `k` nearest neighbors
/// (self excluded) exceeds `global_mean + std_ratio * global_std`.
/// Retained points keep their original order.
///
/// `std_ratio = f64::INFINITY` disables the filter.
pub fn statistical_outlier_filter(
    cloud: &PointCloud,
    k: usize,
    std_ratio: f64,
) -> Result<PointCloud> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if cloud.len() <= k {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            have: cloud.len(),
        });
    }
    if std_ratio == f64::INFINITY {
        return Ok(cloud.clone());
    }

    let tree = KdTree::build(cloud)?;
    let mean_dists: Vec<f64> = cloud
        .points
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            let neighbors = tree.knn(p, k + 1);
            let mut sum = 0.0;
            let mut used = 0usize;
            for (i, d) in &neighbors {
                if *i != idx {
                    sum += d;
                    used += 1;
                }
                if used == k {
                    break;
                }
            }
            sum / used as f64
        })
        .collect();

    let n = mean_dists.len() as f64;
    let global_mean = mean_dists.iter().sum::<f64>() / n;
    let variance = mean_dists
        .iter()
        .map(|d| (d - global_mean) * (d - global_mean))
        .sum::<f64>()
        / n;
    let threshold = global_mean + std_ratio * variance.sqrt();

    let keep: Vec<usize> = mean_dists
        .iter()
        .enumerate()
        .filter_map(|(i, d)| (*d <= threshold).then_some(i))
        .collect();
    Ok(cloud.select(&keep))
}

/// Retains exactly the points inside the closed box.
pub fn crop(cloud: &PointCloud, bounds: &Aabb) -> PointCloud {
    let keep: Vec<usize> = cloud
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| bounds.contains(p).then_some(i))
        .collect();
    cloud.select(&keep)
}

/// Applies a rigid transform: points map by `Rp + t`, normals rotate by
/// `R`, covariances conjugate as `R C R'`.
pub fn apply_transform(cloud: &PointCloud, transform: &RigidTransform) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .map(|p| transform.transform_point(p))
            .collect(),
        normals: cloud
            .normals
            .as_ref()
            .map(|ns| ns.iter().map(|n| transform.rotation * n).collect()),
        covariances: cloud.covariances.as_ref().map(|cs| {
            cs.iter()
                .map(|c| transform.rotation * c * transform.rotation.transpose())
                .collect()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use approx::assert_relative_eq;

    fn cube_corners() -> PointCloud {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push(Point3::new(x, y, z));
                }
            }
        }
        PointCloud::from_points(pts)
    }

    #[test]
    fn voxel_merges_cube_into_centroid() {
        let out = voxel_downsample(&cube_corners(), 2.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out.points[0], Point3::new(0.5, 0.5, 0.5));
    }

    #[test]
    fn tiny_voxels_keep_every_point() {
        let cloud = cube_corners();
        let out = voxel_downsample(&cloud, 0.5).unwrap();
        assert_eq!(out.len(), cloud.len());
        // One point per voxel: centroids are the points themselves.
        assert_eq!(out.points, cloud.points);
    }

    #[test]
    fn voxel_counts_nonincreasing_in_size() {
        let mut rng = SeededRng::new(4);
        let cloud = PointCloud::from_points(
            (0..10_000)
                .map(|_| {
                    Point3::new(
                        rng.uniform_in(0.0, 1.0),
                        rng.uniform_in(0.0, 1.0),
                        rng.uniform_in(0.0, 1.0),
                    )
                })
                .collect(),
        );
        let counts: Vec<usize> = [0.01, 0.05, 0.2]
            .iter()
            .map(|vs| voxel_downsample(&cloud, *vs).unwrap().len())
            .collect();
        assert!(counts[0] >= counts[1] && counts[1] >= counts[2], "{counts:?}");

        // Oracle: direct hash-bucket occupancy count.
        for vs in [0.01, 0.05, 0.2] {
            let mut buckets = std::collections::HashSet::new();
            for p in &cloud.points {
                buckets.insert((
                    (p.x / vs).floor() as i64,
                    (p.y / vs).floor() as i64,
                    (p.z / vs).floor() as i64,
                ));
            }
            assert_eq!(voxel_downsample(&cloud, vs).unwrap().len(), buckets.len());
        }
    }

    #[test]
    fn voxel_rejects_nonpositive_size() {
        assert!(voxel_downsample(&cube_corners(), 0.0).is_err());
        assert!(voxel_downsample(&cube_corners(), -1.0).is_err());
    }

    fn plane_grid(n: usize, spacing: f64) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
            }
        }
        PointCloud::from_points(pts)
    }

    #[test]
    fn normals_on_plane_are_exact() {
        let cloud = plane_grid(10, 0.1);
        let out = estimate_normals(&cloud, 8, Some(Point3::new(0.0, 0.0, 1.0))).unwrap();
        for n in out.normals.as_ref().unwrap() {
            assert!((n - Vector3::z()).norm() < 1e-9, "normal {n:?}");
        }
    }

    #[test]
    fn normals_unit_without_viewpoint() {
        let mut rng = SeededRng::new(8);
        let cloud = PointCloud::from_points(
            (0..200)
                .map(|_| {
                    Point3::new(
                        rng.uniform_in(0.0, 1.0),
                        rng.uniform_in(0.0, 1.0),
                        rng.uniform_in(0.0, 0.2),
                    )
                })
                .collect(),
        );
        let out = estimate_normals(&cloud, 12, None).unwrap();
        for n in out.normals.as_ref().unwrap() {
            assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_normals_point_outward_on_visible_cap() {
        // Fibonacci-style deterministic sphere sampling.
        let n = 2000;
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        let pts: Vec<Point3<f64>> = (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                Point3::new(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        let cloud = PointCloud::from_points(pts);
        let out = estimate_normals(&cloud, 10, Some(Point3::new(0.0, 0.0, 10.0))).unwrap();
        let normals = out.normals.as_ref().unwrap();
        for (p, n) in cloud.points.iter().zip(normals) {
            if p.z > 0.5 {
                // Outward on the cap facing the viewpoint, and close to
                // the analytic sphere normal p/|p|.
                assert!(n.dot(&p.coords) > 0.0);
                assert!(n.dot(&p.coords.normalize()) > 0.95, "normal {n:?} at {p:?}");
            }
        }
    }

    #[test]
    fn normals_insufficient_points() {
        let cloud = PointCloud::from_points(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)]);
        assert!(matches!(
            estimate_normals(&cloud, 3, None),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn outlier_filter_removes_far_point() {
        let mut rng = SeededRng::new(21);
        let mut pts: Vec<Point3<f64>> = (0..500)
            .map(|_| {
                Point3::new(
                    rng.uniform_in(0.0, 1.0),
                    rng.uniform_in(0.0, 1.0),
                    rng.uniform_in(0.0, 1.0),
                )
            })
            .collect();
        pts.push(Point3::new(100.0, 100.0, 100.0));
        let cloud = PointCloud::from_points(pts);
        let out = statistical_outlier_filter(&cloud, 10, 2.0).unwrap();
        assert_eq!(out.len(), 500);
        assert!(out.points.iter().all(|p| p.x < 50.0));

        // Brute-force oracle for the same statistics.
        let mut means = Vec::new();
        for (i, p) in cloud.points.iter().enumerate() {
            let mut dists: Vec<f64> = cloud
                .points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| (p - q).norm())
                .collect();
            dists.sort_by(f64::total_cmp);
            means.push(dists[..10].iter().sum::<f64>() / 10.0);
        }
        let gm = means.iter().sum::<f64>() / means.len() as f64;
        let gs =
            (means.iter().map(|d| (d - gm) * (d - gm)).sum::<f64>() / means.len() as f64).sqrt();
        let expected: Vec<usize> = means
            .iter()
            .enumerate()
            .filter_map(|(i, d)| (*d <= gm + 2.0 * gs).then_some(i))
            .collect();
        assert_eq!(out.len(), expected.len());
    }

    #[test]
    fn outlier_filter_keeps_equal_mean_configuration() {
        // Cube corners with k = 3: every corner's three nearest neighbors
        // sit at edge distance 1, so all means are equal and the variance
        // is zero. Any positive ratio keeps everything.
        let cloud = cube_corners();
        for ratio in [1e-9, 0.5, 2.0] {
            let out = statistical_outlier_filter(&cloud, 3, ratio).unwrap();
            assert_eq!(out, cloud, "ratio {ratio}");
        }
    }

    #[test]
    fn outlier_filter_preserves_order() {
        let line = PointCloud::from_points(
            (0..50).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect(),
        );
        // Mean distance to 2 NN is 1 for interior points, 1.5 at the ends.
        let filtered = statistical_outlier_filter(&line, 2, 1e-9).unwrap();
        assert_eq!(filtered.len(), 48);
        for w in filtered.points.windows(2) {
            assert!(w[0].x < w[1].x);
        }
    }

    #[test]
    fn outlier_filter_infinite_ratio_is_identity() {
        let cloud = cube_corners();
        let out = statistical_outlier_filter(&cloud, 3, f64::INFINITY).unwrap();
        assert_eq!(out, cloud);
    }

    #[test]
    fn crop_membership() {
        let cloud = PointCloud::from_points(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(2.0, 2.0, 2.0),
        ]);
        let bounds = Aabb::new(Point3::new(0.5, 0.5, 0.5), Point3::new(1.5, 1.5, 1.5));
        let out = crop(&cloud, &bounds);
        assert_eq!(out.points, vec![Point3::new(1.0, 1.0, 1.0)]);

        let everything = Aabb::new(Point3::new(-10.0, -10.0, -10.0), Point3::new(10.0, 10.0, 10.0));
        assert_eq!(crop(&cloud, &everything), cloud);

        let disjoint = Aabb::new(Point3::new(5.0, 5.0, 5.0), Point3::new(6.0, 6.0, 6.0));
        assert!(crop(&cloud, &disjoint).is_empty());
    }

    #[test]
    fn transform_identity_is_bitwise_equal() {
        let cloud = cube_corners();
        let out = apply_transform(&cloud, &RigidTransform::identity());
        assert_eq!(out, cloud);
    }

    #[test]
    fn transform_preserves_pairwise_distances() {
        let mut rng = SeededRng::new(33);
        let cloud = PointCloud::from_points(
            (0..50)
                .map(|_| {
                    Point3::new(
                        rng.uniform_in(-1.0, 1.0),
                        rng.uniform_in(-1.0, 1.0),
                        rng.uniform_in(-1.0, 1.0),
                    )
                })
                .collect(),
        );
        let t = RigidTransform::from_axis_angle(
            &Vector3::new(0.3, 1.0, -0.2),
            1.1,
            Vector3::new(0.5, -2.0, 0.25),
        );
        let moved = apply_transform(&cloud, &t);
        for i in 0..cloud.len() {
            for j in (i + 1)..cloud.len() {
                let before = (cloud.points[i] - cloud.points[j]).norm();
                let after = (moved.points[i] - moved.points[j]).norm();
                assert!((before - after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn transform_composition_matches_sequential_application() {
        let cloud = cube_corners();
        let t1 = RigidTransform::from_axis_angle(
            &Vector3::z(),
            0.4,
            Vector3::new(0.1, 0.0, 0.0),
        );
        let t2 = RigidTransform::from_axis_angle(
            &Vector3::x(),
            -0.9,
            Vector3::new(0.0, 0.2, -0.1),
        );
        let once = apply_transform(&cloud, &t2.compose(&t1));
        let twice = apply_transform(&apply_transform(&cloud, &t1), &t2);
        for (a, b) in once.points.iter().zip(&twice.points) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
