//! Point-to-plane metrics from local neighborhood fits.

use nalgebra::{Matrix3, Point3, Vector3, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sym_eigen3, KdTree, PointCloud};

use super::DistanceReport;

/// Local least-squares plane: centroid, unit normal, and in-plane axes.
/// Returns `None` when the neighborhood has rank < 2.
pub(crate) struct LocalPlane {
    pub centroid: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
}

pub(crate) fn fit_local_plane(points: &[Point3<f64>]) -> Option<LocalPlane> {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let (evals, evecs) = sym_eigen3(&cov);
    // Rank check: a plane needs two significant spread directions.
    if evals[1] <= 1e-12 * evals[2].max(1e-300) || evals[2] <= 0.0 {
        return None;
    }
    let normal = evecs[0];
    // Deterministic in-plane frame: project the global axis least aligned
    // with the normal (lowest index wins ties).
    let mut axis = 0;
    for k in 1..3 {
        if normal[k].abs() < normal[axis].abs() - 1e-15 {
            axis = k;
        }
    }
    let mut e = Vector3::zeros();
    e[axis] = 1.0;
    let u = (e - normal * normal.dot(&e)).normalize();
    let v = normal.cross(&u);
    Some(LocalPlane {
        centroid,
        normal,
        u,
        v,
    })
}

/// Distance from each query point to the least-squares plane through its
/// k nearest reference neighbors. Rank-deficient neighborhoods are
/// flagged (NaN) and excluded from the statistics.
pub fn plane_distance_lsq(
    query: &PointCloud,
    reference: &PointCloud,
    k: usize,
) -> Result<DistanceReport> {
    if query.is_empty() {
        return Err(Error::EmptyInput("query cloud is empty"));
    }
    if k < 3 {
        return Err(Error::InvalidParameter("plane fit needs k >= 3".into()));
    }
    if reference.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            have: reference.len(),
        });
    }
    let tree = KdTree::build(reference)?;
    let distances: Vec<f64> = query
        .points
        .par_iter()
        .map(|p| {
            let neighbors: Vec<Point3<f64>> = tree
                .knn(p, k)
                .into_iter()
                .map(|(i, _)| reference.points[i])
                .collect();
            match fit_local_plane(&neighbors) {
                Some(plane) => plane.normal.dot(&(p.coords - plane.centroid)).abs(),
                None => f64::NAN,
            }
        })
        .collect();
    let finite: Vec<f64> = distances.iter().copied().filter(|d| d.is_finite()).collect();
    let scalar = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(DistanceReport::new(Some(distances.clone()), &distances, scalar))
}

/// Distance from each query point to a local quadric fit
/// `z = a x^2 + b x y + c y^2 + d x + e y + f` in the neighborhood's
/// least-squares plane frame, minimized by a saddle-aware damped Newton
/// search. Ill-conditioned fits fall back to the plane distance and are
/// flagged.
pub fn plane_distance_quadratic(
    query: &PointCloud,
    reference: &PointCloud,
    k: usize,
) -> Result<DistanceReport> {
    if query.is_empty() {
        return Err(Error::EmptyInput("query cloud is empty"));
    }
    if k < 6 {
        return Err(Error::InvalidParameter(
            "quadric fit needs k >= 6 (six coefficients)".into(),
        ));
    }
    if reference.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            have: reference.len(),
        });
    }
    let tree = KdTree::build(reference)?;
    let results: Vec<(f64, bool)> = query
        .points
        .par_iter()
        .map(|p| {
            let neighbors: Vec<Point3<f64>> = tree
                .knn(p, k)
                .into_iter()
                .map(|(i, _)| reference.points[i])
                .collect();
            let plane = match fit_local_plane(&neighbors) {
                Some(plane) => plane,
                None => return (f64::NAN, true),
            };
            let local = |p: &Point3<f64>| {
                let d = p.coords - plane.centroid;
                Vector3::new(d.dot(&plane.u), d.dot(&plane.v), d.dot(&plane.normal))
            };
            let q = local(p);
            let plane_distance = q.z.abs();

            match fit_quadric(&neighbors.iter().map(local).collect::<Vec<_>>()) {
                Some(coeffs) => {
                    let distance = quadric_distance(&coeffs, &q);
                    (distance, false)
                }
                // Ill-conditioned quadric: plane-distance fallback.
                None => (plane_distance, true),
            }
        })
        .collect();

    let distances: Vec<f64> = results.iter().map(|(d, _)| *d).collect();
    let fallbacks = results.iter().filter(|(_, f)| *f).count();
    let finite: Vec<f64> = distances.iter().copied().filter(|d| d.is_finite()).collect();
    let scalar = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let mut report = DistanceReport::new(Some(distances.clone()), &distances, scalar);
    report.flagged = report.flagged.max(fallbacks);
    Ok(report)
}

/// Least-squares quadric coefficients (a, b, c, d, e, f); `None` when the
/// normal system is ill-conditioned.
fn fit_quadric(local: &[Vector3<f64>]) -> Option<Vector6<f64>> {
    let mut ata = nalgebra::Matrix6::<f64>::zeros();
    let mut atb = Vector6::zeros();
    for p in local {
        let row = Vector6::new(p.x * p.x, p.x * p.y, p.y * p.y, p.x, p.y, 1.0);
        ata += row * row.transpose();
        atb += row * p.z;
    }
    let eigen = ata.symmetric_eigen();
    let max_ev = eigen.eigenvalues.amax();
    let min_ev = eigen
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min_ev > 0.0) || max_ev / min_ev > 1e12 {
        return None;
    }
    ata.cholesky().map(|chol| chol.solve(&atb))
}

/// Distance from local point `q` to the graph of the quadric: damped
/// Newton on the 2D foot-point problem, with steepest-descent steps under
/// indefinite curvature and negative-curvature escapes at saddles (the
/// symmetric point above a fold would otherwise trap the search).
fn quadric_distance(coeffs: &Vector6<f64>, q: &Vector3<f64>) -> f64 {
    let h = |x: f64, y: f64| {
        coeffs[0] * x * x + coeffs[1] * x * y + coeffs[2] * y * y + coeffs[3] * x + coeffs[4] * y
            + coeffs[5]
    };
    let objective = |x: f64, y: f64| {
        let dz = h(x, y) - q.z;
        (x - q.x) * (x - q.x) + (y - q.y) * (y - q.y) + dz * dz
    };

    let (mut x, mut y) = (q.x, q.y);
    let mut f = objective(x, y);
    let scale = 1.0 + q.x.abs() + q.y.abs() + q.z.abs();

    // Line search with expansion then contraction; returns the improved
    // location if any step along (dx, dy) decreases the objective.
    let line_search = |x: f64, y: f64, f: f64, dx: f64, dy: f64| -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        let mut t = 1.0f64;
        loop {
            let c = objective(x + t * dx, y + t * dy);
            if best.map_or(c < f, |(_, _, bf)| c < bf) {
                best = Some((x + t * dx, y + t * dy, c));
                t *= 2.0;
                if t > 1e8 {
                    break;
                }
            } else {
                break;
            }
        }
        if best.is_none() {
            let mut t = 0.5f64;
            for _ in 0..60 {
                let c = objective(x + t * dx, y + t * dy);
                if c < f {
                    best = Some((x + t * dx, y + t * dy, c));
                    break;
                }
                t /= 2.0;
            }
        }
        best
    };

    for _ in 0..300 {
        let hx = 2.0 * coeffs[0] * x + coeffs[1] * y + coeffs[3];
        let hy = coeffs[1] * x + 2.0 * coeffs[2] * y + coeffs[4];
        let dz = h(x, y) - q.z;
        let gx = 2.0 * (x - q.x) + 2.0 * dz * hx;
        let gy = 2.0 * (y - q.y) + 2.0 * dz * hy;
        let hxx = 2.0 + 2.0 * (hx * hx + dz * 2.0 * coeffs[0]);
        let hxy = 2.0 * (hx * hy + dz * coeffs[1]);
        let hyy = 2.0 + 2.0 * (hy * hy + dz * 2.0 * coeffs[2]);

        let grad_norm = (gx * gx + gy * gy).sqrt();
        let trace = hxx + hyy;
        let det = hxx * hyy - hxy * hxy;
        let disc = ((hxx - hyy) / 2.0).powi(2) + hxy * hxy;
        let min_eig = trace / 2.0 - disc.sqrt();
        let curvature_tol = 1e-12 * (1.0 + trace.abs());

        let step = if grad_norm <= 1e-13 * scale {
            if min_eig >= -curvature_tol {
                break; // genuine local minimum
            }
            // Saddle: walk the most negative curvature direction, either
            // sign.
            let (vx, vy) = if hxy.abs() > 1e-300 {
                let n = ((min_eig - hyy).powi(2) + hxy * hxy).sqrt();
                ((min_eig - hyy) / n, hxy / n)
            } else if hxx <= hyy {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            line_search(x, y, f, vx * scale, vy * scale)
                .or_else(|| line_search(x, y, f, -vx * scale, -vy * scale))
        } else if min_eig > curvature_tol && det > 0.0 {
            // Newton direction (positive definite Hessian).
            let dx = -(gx * hyy - gy * hxy) / det;
            let dy = -(hxx * gy - hxy * gx) / det;
            line_search(x, y, f, dx, dy).or_else(|| {
                let l = hxx.abs() + 2.0 * hxy.abs() + hyy.abs() + 1e-9;
                line_search(x, y, f, -gx / l, -gy / l)
            })
        } else {
            // Indefinite curvature: steepest descent with a Lipschitz
            // scaled step.
            let l = hxx.abs() + 2.0 * hxy.abs() + hyy.abs() + 1e-9;
            line_search(x, y, f, -gx / l, -gy / l)
        };

        match step {
            Some((nx, ny, nf)) => {
                let stalled = (f - nf) <= 1e-30 * (1.0 + f);
                x = nx;
                y = ny;
                f = nf;
                if stalled && grad_norm <= 1e-10 * scale {
                    break;
                }
            }
            None => break,
        }
    }
    f.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn plane_fixture() -> (PointCloud, PointCloud) {
        let fixture = synth::make_metric_pair(
            synth::ShapeKind::Plane,
            &synth::PerturbationSpec::none(5),
        )
        .unwrap();
        (fixture.test, fixture.reference)
    }

    #[test]
    fn lsq_reads_exact_offset_above_plane() {
        let (test, reference) = plane_fixture();
        let report = plane_distance_lsq(&test, &reference, 20).unwrap();
        for d in report.per_point.as_ref().unwrap() {
            assert_eq!(*d, 0.5);
        }
        assert_eq!(report.scalar, 0.5);
    }

    #[test]
    fn lsq_on_surface_point_is_zero() {
        let (_, reference) = plane_fixture();
        let probe = PointCloud::from_points(vec![reference.points[0]]);
        let report = plane_distance_lsq(&probe, &reference, 20).unwrap();
        assert!(report.per_point.as_ref().unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn lsq_matches_normal_equations_oracle_on_noisy_plane() {
        // Distances must equal an independent plane fit via the full
        // normal-equations route.
        let mut rng = crate::rng::SeededRng::new(21);
        let reference = PointCloud::from_points(
            (0..2000)
                .map(|_| {
                    nalgebra::Point3::new(
                        rng.uniform_in(0.0, 1.0),
                        rng.uniform_in(0.0, 1.0),
                        0.01 * rng.normal(),
                    )
                })
                .collect(),
        );
        let query = PointCloud::from_points(
            (0..50)
                .map(|_| {
                    nalgebra::Point3::new(
                        rng.uniform_in(0.2, 0.8),
                        rng.uniform_in(0.2, 0.8),
                        rng.uniform_in(0.3, 0.7),
                    )
                })
                .collect(),
        );
        let k = 20;
        let report = plane_distance_lsq(&query, &reference, k).unwrap();
        let tree = KdTree::build(&reference).unwrap();
        for (qi, p) in query.points.iter().enumerate() {
            let neighbors: Vec<nalgebra::Point3<f64>> = tree
                .knn(p, k)
                .into_iter()
                .map(|(i, _)| reference.points[i])
                .collect();
            // Oracle: plane through centroid minimizing squared offsets,
            // found by explicit eigen decomposition of the scatter matrix
            // assembled in a different order.
            let n = neighbors.len() as f64;
            let cx = neighbors.iter().map(|p| p.x).sum::<f64>() / n;
            let cy = neighbors.iter().map(|p| p.y).sum::<f64>() / n;
            let cz = neighbors.iter().map(|p| p.z).sum::<f64>() / n;
            let mut scatter = Matrix3::zeros();
            for q in &neighbors {
                let d = Vector3::new(q.x - cx, q.y - cy, q.z - cz);
                scatter += d * d.transpose();
            }
            let (_, evecs) = sym_eigen3(&scatter);
            let normal = evecs[0];
            let want = normal
                .dot(&Vector3::new(p.x - cx, p.y - cy, p.z - cz))
                .abs();
            let got = report.per_point.as_ref().unwrap()[qi];
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn quadratic_degenerates_to_lsq_on_plane() {
        let (test, reference) = plane_fixture();
        let lsq = plane_distance_lsq(&test, &reference, 20).unwrap();
        let quad = plane_distance_quadratic(&test, &reference, 20).unwrap();
        for (a, b) in lsq
            .per_point
            .as_ref()
            .unwrap()
            .iter()
            .zip(quad.per_point.as_ref().unwrap())
        {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn quadratic_k_less_than_six_is_rejected() {
        let (test, reference) = plane_fixture();
        assert!(plane_distance_quadratic(&test, &reference, 5).is_err());
    }

    #[test]
    fn quadratic_distance_to_parabola_sheet() {
        // Reference densely sampled from z = x^2; query on the symmetry
        // axis at (0, 0, 1). In the patch frame the quadric fit is exact,
        // so the result must match the 1D oracle min_x x^2 + (x^2 - 1)^2.
        let mut points = Vec::new();
        let nx = 81;
        let ny = 9;
        for j in 0..ny {
            for i in 0..nx {
                let x = -1.0 + 2.0 * i as f64 / (nx - 1) as f64;
                let y = -1.0 + 2.0 * j as f64 / (ny - 1) as f64;
                points.push(nalgebra::Point3::new(x, y, x * x));
            }
        }
        let reference = PointCloud::from_points(points);
        let query = PointCloud::from_points(vec![nalgebra::Point3::new(0.0, 0.0, 1.0)]);
        let k = reference.len();
        let report = plane_distance_quadratic(&query, &reference, k).unwrap();
        let got = report.per_point.as_ref().unwrap()[0];

        // Oracle: dense 1D scan of g(x) = x^2 + (x^2 - 1)^2.
        let mut best = f64::INFINITY;
        let steps = 400_000;
        for s in 0..=steps {
            let x = 2.0 * s as f64 / steps as f64; // [0, 2]
            let g = x * x + (x * x - 1.0) * (x * x - 1.0);
            if g < best {
                best = g;
            }
        }
        let oracle = best.sqrt();
        // Analytically sqrt(3)/2.
        assert!((oracle - 0.75f64.sqrt()).abs() < 1e-9);
        assert!(
            (got - oracle).abs() < 1e-7,
            "quadric distance {got} vs oracle {oracle}"
        );
    }

    #[test]
    fn collinear_reference_neighborhood_is_flagged() {
        let reference = PointCloud::from_points(
            (0..30)
                .map(|i| nalgebra::Point3::new(i as f64 * 0.01, 0.0, 0.0))
                .collect(),
        );
        let query = PointCloud::from_points(vec![nalgebra::Point3::new(0.1, 0.2, 0.0)]);
        let report = plane_distance_lsq(&query, &reference, 10).unwrap();
        assert_eq!(report.flagged, 1);
        assert!(report.per_point.as_ref().unwrap()[0].is_nan());
    }
}
