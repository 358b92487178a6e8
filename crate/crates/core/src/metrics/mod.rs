//! Surface deviation metrics.
//!
//! Cloud-to-cloud distances (Chamfer, Hausdorff, Earth Mover's), local
//! plane fits (least-squares, quadratic, Delaunay-triangulated), and
//! signed cloud-to-mesh distance. Every operation produces a
//! [`DistanceReport`] with per-point values (where defined), a scalar
//! summary, Gaussian statistics, and a histogram.

mod cloud_to_mesh;
mod emd;
mod plane;
mod point_to_point;
mod triangulation;

pub use cloud_to_mesh::cloud_to_mesh;
pub use emd::{earth_movers, solve_assignment, EMD_DEFAULT_CAP};
pub use plane::{plane_distance_lsq, plane_distance_quadratic};
pub use point_to_point::{chamfer, hausdorff};
pub use triangulation::{delaunay_2d, plane_distance_triangulation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, TriangleMesh};

/// Histogram over the finite per-point distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` monotone bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub const HISTOGRAM_BINS: usize = 32;

impl Histogram {
    fn from_values(values: &[f64]) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return Self {
                edges: vec![0.0, 0.0],
                counts: vec![0],
            };
        }
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            return Self {
                edges: vec![min, max],
                counts: vec![finite.len() as u64],
            };
        }
        let bins = HISTOGRAM_BINS;
        let width = (max - min) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| min + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for v in &finite {
            let mut bin = ((v - min) / width) as usize;
            if bin >= bins {
                bin = bins - 1; // v == max
            }
            counts[bin] += 1;
        }
        Self { edges, counts }
    }
}

/// Result of one distance measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// One distance per query point (signed only for cloud-to-mesh);
    /// `None` for Earth Mover's, which has no per-point notion. NaN marks
    /// points whose local computation was degenerate.
    pub per_point: Option<Vec<f64>>,
    /// The metric's single summary value.
    pub scalar: f64,
    /// Sample mean over finite per-point values.
    pub mean: f64,
    /// Unbiased sample standard deviation over finite per-point values.
    pub std: f64,
    pub histogram: Histogram,
    /// Number of degenerate (excluded) per-point results.
    pub flagged: usize,
}

impl DistanceReport {
    /// Builds a report whose statistics come from `values` (NaN entries
    /// are flagged and excluded).
    pub(crate) fn new(per_point: Option<Vec<f64>>, stats_values: &[f64], scalar: f64) -> Self {
        let finite: Vec<f64> = stats_values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        let flagged = stats_values.len() - finite.len();
        let (mean, std) = mean_std(&finite);
        Self {
            per_point,
            scalar,
            mean,
            std,
            histogram: Histogram::from_values(stats_values),
            flagged,
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Gaussian summary of a report: sample mean and unbiased sample
/// standard deviation of the finite per-point distances.
pub fn fit_gaussian(report: &DistanceReport) -> Result<(f64, f64)> {
    let values = report
        .per_point
        .as_deref()
        .ok_or(Error::InsufficientData("report has no per-point distances"))?;
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 finite distances for a Gaussian fit",
        ));
    }
    Ok(mean_std(&finite))
}

/// The seven distance measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Chamfer,
    Hausdorff,
    EarthMovers,
    PlaneLsq,
    PlaneQuadratic,
    PlaneTriangulation,
    CloudToMesh,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Chamfer,
        MetricKind::Hausdorff,
        MetricKind::EarthMovers,
        MetricKind::PlaneLsq,
        MetricKind::PlaneQuadratic,
        MetricKind::PlaneTriangulation,
        MetricKind::CloudToMesh,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Chamfer => "chamfer",
            MetricKind::Hausdorff => "hausdorff",
            MetricKind::EarthMovers => "earth-movers",
            MetricKind::PlaneLsq => "plane-lsq",
            MetricKind::PlaneQuadratic => "plane-quadratic",
            MetricKind::PlaneTriangulation => "plane-triangulation",
            MetricKind::CloudToMesh => "cloud-to-mesh",
        }
    }
}

/// Reference surface for a measurement: a cloud for cloud-to-cloud
/// metrics, a mesh for cloud-to-mesh.
pub enum MetricReference<'a> {
    Cloud(&'a PointCloud),
    Mesh(&'a TriangleMesh),
}

/// Tunables shared by the dispatcher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    /// Neighborhood size for the least-squares and quadratic plane fits.
    pub k_plane: usize,
    /// Neighborhood size for the triangulated fit.
    pub k_triangulation: usize,
    /// Chamfer reports squared distances when set.
    pub squared: bool,
    /// Hard size cap for the exact assignment solve.
    pub emd_cap: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            k_plane: 20,
            k_triangulation: 12,
            squared: false,
            emd_cap: EMD_DEFAULT_CAP,
        }
    }
}

/// Dispatches one metric computation.
pub fn compute_metric(
    kind: MetricKind,
    query: &PointCloud,
    reference: &MetricReference<'_>,
    params: &MetricParams,
) -> Result<DistanceReport> {
    match (kind, reference) {
        (MetricKind::CloudToMesh, MetricReference::Mesh(mesh)) => cloud_to_mesh(query, mesh),
        (MetricKind::CloudToMesh, MetricReference::Cloud(_)) => Err(Error::InvalidParameter(
            "cloud-to-mesh needs a mesh reference".into(),
        )),
        (_, MetricReference::Mesh(_)) => Err(Error::InvalidParameter(format!(
            "{} needs a point cloud reference",
            kind.name()
        ))),
        (MetricKind::Chamfer, MetricReference::Cloud(cloud)) => {
            chamfer(query, cloud, params.squared)
        }
        (MetricKind::Hausdorff, MetricReference::Cloud(cloud)) => hausdorff(query, cloud),
        (MetricKind::EarthMovers, MetricReference::Cloud(cloud)) => {
            earth_movers(query, cloud, params.emd_cap)
        }
        (MetricKind::PlaneLsq, MetricReference::Cloud(cloud)) => {
            plane_distance_lsq(query, cloud, params.k_plane)
        }
        (MetricKind::PlaneQuadratic, MetricReference::Cloud(cloud)) => {
            plane_distance_quadratic(query, cloud, params.k_plane.max(6))
        }
        (MetricKind::PlaneTriangulation, MetricReference::Cloud(cloud)) => {
            plane_distance_triangulation(query, cloud, params.k_triangulation)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_gaussian_basics() {
        let report = DistanceReport::new(Some(vec![0.5; 10]), &[0.5; 10], 0.5);
        let (mean, std) = fit_gaussian(&report).unwrap();
        assert_eq!(mean, 0.5);
        assert_eq!(std, 0.0);

        let report = DistanceReport::new(Some(vec![-1.0, 1.0]), &[-1.0, 1.0], 0.0);
        let (mean, std) = fit_gaussian(&report).unwrap();
        assert_eq!(mean, 0.0);
        assert!((std - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fit_gaussian_law_of_large_numbers() {
        let mut rng = crate::rng::SeededRng::new(33);
        let n = 100_000;
        let values: Vec<f64> = (0..n).map(|_| 0.2 + 0.05 * rng.normal()).collect();
        let report = DistanceReport::new(Some(values.clone()), &values, 0.0);
        let (mean, std) = fit_gaussian(&report).unwrap();
        assert!((mean - 0.2).abs() < 0.001, "mean {mean}");
        assert!((std - 0.05).abs() < 0.002, "std {std}");
    }

    #[test]
    fn fit_gaussian_needs_two_points() {
        let report = DistanceReport::new(Some(vec![1.0]), &[1.0], 1.0);
        assert!(fit_gaussian(&report).is_err());
        let nan_report = DistanceReport::new(
            Some(vec![1.0, f64::NAN]),
            &[1.0, f64::NAN],
            1.0,
        );
        assert!(fit_gaussian(&nan_report).is_err());
    }

    #[test]
    fn histogram_counts_sum_to_finite_points() {
        let values = vec![0.1, 0.2, 0.3, f64::NAN, 0.4, 0.25];
        let report = DistanceReport::new(Some(values.clone()), &values, 0.0);
        let total: u64 = report.histogram.counts.iter().sum();
        assert_eq!(total, 5);
        assert_eq!(report.flagged, 1);
    }

    #[test]
    fn metrics_are_rigid_invariant() {
        use crate::geometry::{apply_transform, RigidTransform};
        use crate::synth::{make_metric_pair, PerturbationSpec, ShapeKind};
        use nalgebra::Vector3;

        let fixture = make_metric_pair(
            ShapeKind::SineWave,
            &PerturbationSpec {
                noise_std: 0.01,
                ..PerturbationSpec::none(19)
            },
        )
        .unwrap();
        let motion = RigidTransform::from_axis_angle(
            &Vector3::new(0.4, -0.7, 0.2),
            1.3,
            Vector3::new(2.0, -1.0, 0.5),
        );
        let q2 = apply_transform(&fixture.test, &motion);
        let r2 = apply_transform(&fixture.reference, &motion);
        let params = MetricParams::default();
        for kind in [
            MetricKind::Chamfer,
            MetricKind::Hausdorff,
            MetricKind::PlaneLsq,
            MetricKind::PlaneTriangulation,
        ] {
            let base = compute_metric(
                kind,
                &fixture.test,
                &MetricReference::Cloud(&fixture.reference),
                &params,
            )
            .unwrap();
            let moved = compute_metric(kind, &q2, &MetricReference::Cloud(&r2), &params).unwrap();
            assert!(
                (base.scalar - moved.scalar).abs() < 1e-9,
                "{}: {} vs {}",
                kind.name(),
                base.scalar,
                moved.scalar
            );
        }
        // The assignment metric on a smaller fixture (cubic cost).
        let small_q = fixture.test.select(&(0..200).collect::<Vec<_>>());
        let small_r = fixture.reference.select(&(0..200).collect::<Vec<_>>());
        let base = earth_movers(&small_q, &small_r, 2048).unwrap().scalar;
        let moved = earth_movers(
            &apply_transform(&small_q, &motion),
            &apply_transform(&small_r, &motion),
            2048,
        )
        .unwrap()
        .scalar;
        assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn zero_perturbation_fixtures_stay_in_band() {
        use crate::synth::{make_metric_pair, make_shape_mesh, PerturbationSpec, ShapeKind,
            DEFAULT_SEGMENTS};

        let params = MetricParams::default();
        for shape in ShapeKind::ALL {
            let fixture = make_metric_pair(shape, &PerturbationSpec::none(23)).unwrap();
            let mesh = make_shape_mesh(shape, DEFAULT_SEGMENTS).unwrap();
            for kind in MetricKind::ALL {
                let reference = match kind {
                    MetricKind::CloudToMesh => MetricReference::Mesh(&mesh),
                    _ => MetricReference::Cloud(&fixture.reference),
                };
                let report =
                    compute_metric(kind, &fixture.test, &reference, &params).unwrap();
                // The own pre-image caps every distance at 0.5; tilted
                // facets only pull estimates below it.
                assert!(
                    report.scalar > 0.0 && report.scalar <= 0.5 + 1e-9,
                    "{}/{}: scalar {}",
                    shape.name(),
                    kind.name(),
                    report.scalar
                );
                if shape == ShapeKind::Plane {
                    let tolerance = if kind == MetricKind::PlaneQuadratic {
                        1e-7
                    } else {
                        1e-9
                    };
                    assert!(
                        (report.scalar - 0.5).abs() < tolerance,
                        "{}: plane scalar {}",
                        kind.name(),
                        report.scalar
                    );
                }
            }
        }
    }
}
