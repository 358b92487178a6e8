//! Point-to-point metrics: Chamfer and Hausdorff.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};

use super::DistanceReport;

fn directed_nn(query: &PointCloud, target_tree: &KdTree) -> Vec<f64> {
    query
        .points
        .par_iter()
        .map(|p| target_tree.nearest(p).1)
        .collect()
}

/// Symmetric Chamfer distance: half the sum of the two directed mean
/// nearest-neighbor distances. `squared` switches the per-pair term to
/// the squared distance; the default Euclidean form reads in the units of
/// the clouds. Per-point values are the query-to-reference distances.
pub fn chamfer(query: &PointCloud, reference: &PointCloud, squared: bool) -> Result<DistanceReport> {
    if query.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("chamfer needs two non-empty clouds"));
    }
    let query_tree = KdTree::build(query)?;
    let reference_tree = KdTree::build(reference)?;
    let mut forward = directed_nn(query, &reference_tree);
    let mut backward = directed_nn(reference, &query_tree);
    if squared {
        for d in forward.iter_mut().chain(backward.iter_mut()) {
            *d *= *d;
        }
    }
    let mean_fwd = forward.iter().sum::<f64>() / forward.len() as f64;
    let mean_bwd = backward.iter().sum::<f64>() / backward.len() as f64;
    let scalar = 0.5 * (mean_fwd + mean_bwd);
    Ok(DistanceReport::new(Some(forward.clone()), &forward, scalar))
}

/// Symmetric Hausdorff distance: the larger of the two directed maxima
/// of nearest-neighbor distances.
pub fn hausdorff(query: &PointCloud, reference: &PointCloud) -> Result<DistanceReport> {
    if query.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("hausdorff needs two non-empty clouds"));
    }
    let query_tree = KdTree::build(query)?;
    let reference_tree = KdTree::build(reference)?;
    let forward = directed_nn(query, &reference_tree);
    let backward = directed_nn(reference, &query_tree);
    let max_fwd = forward.iter().copied().fold(0.0f64, f64::max);
    let max_bwd = backward.iter().copied().fold(0.0f64, f64::max);
    let scalar = max_fwd.max(max_bwd);
    Ok(DistanceReport::new(Some(forward.clone()), &forward, scalar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn cloud(points: &[(f64, f64, f64)]) -> PointCloud {
        PointCloud::from_points(points.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect())
    }

    #[test]
    fn self_distance_is_zero() {
        let a = cloud(&[(0.0, 0.0, 0.0), (1.0, 2.0, 3.0), (-1.0, 0.5, 0.25)]);
        assert_eq!(chamfer(&a, &a, false).unwrap().scalar, 0.0);
        assert_eq!(hausdorff(&a, &a).unwrap().scalar, 0.0);
    }

    #[test]
    fn hand_computed_asymmetric_case() {
        let a = cloud(&[(0.0, 0.0, 0.0)]);
        let b = cloud(&[(1.0, 0.0, 0.0), (3.0, 0.0, 0.0)]);
        // chamfer: 0.5 * (1 + (1 + 3) / 2) = 1.5
        assert_eq!(chamfer(&a, &b, false).unwrap().scalar, 1.5);
        // hausdorff: max(1, max(1, 3)) = 3
        assert_eq!(hausdorff(&a, &b).unwrap().scalar, 3.0);
    }

    #[test]
    fn plane_fixture_reads_half_meter_exactly() {
        let fixture = crate::synth::make_metric_pair(
            crate::synth::ShapeKind::Plane,
            &crate::synth::PerturbationSpec::none(5),
        )
        .unwrap();
        let c = chamfer(&fixture.test, &fixture.reference, false).unwrap();
        assert_eq!(c.scalar, 0.5);
        let h = hausdorff(&fixture.test, &fixture.reference).unwrap();
        assert_eq!(h.scalar, 0.5);
    }

    #[test]
    fn squared_flag_squares_distances() {
        let a = cloud(&[(0.0, 0.0, 0.0)]);
        let b = cloud(&[(2.0, 0.0, 0.0)]);
        assert_eq!(chamfer(&a, &b, true).unwrap().scalar, 4.0);
        assert_eq!(chamfer(&a, &b, false).unwrap().scalar, 2.0);
    }

    #[test]
    fn directed_hausdorff_zero_iff_subset() {
        let a = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let b = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0)]);
        // a is a subset of b: the forward direction is zero.
        let report = hausdorff(&a, &b).unwrap();
        assert!(report.per_point.as_ref().unwrap().iter().all(|&d| d == 0.0));
        // but the symmetric scalar sees b's extra point.
        assert_eq!(report.scalar, 1.0);
    }

    #[test]
    fn empty_inputs_error() {
        let a = cloud(&[(0.0, 0.0, 0.0)]);
        assert!(chamfer(&a, &PointCloud::default(), false).is_err());
        assert!(hausdorff(&PointCloud::default(), &a).is_err());
    }
}
