//! Pairwise ICP: point-to-plane and generalized (plane-to-plane).
//!
//! Both variants share one loop: nearest-neighbor correspondence inside a
//! distance cutoff, a damped Gauss-Newton pose update with backtracking
//! (the frozen-set objective never increases), and convergence on the
//! relative change of the inlier RMSE.
//!
//! The generalized variant weights residuals by inverse summed surface
//! covariances and additionally rejects correspondences whose normals
//! disagree (`n_source . n_target <= 0`), which keeps the two faces of a
//! thin wall apart. Point-to-plane performs no such filtering.

use nalgebra::{Matrix3, Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{estimate_normals, KdTree, PointCloud, RigidTransform};

use super::se3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcpMethod {
    PointToPlane,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IcpParams {
    /// Correspondences farther than this are rejected (meters).
    pub max_correspondence_distance: f64,
    pub max_iterations: usize,
    /// Stop when |rmse_prev - rmse| / rmse_prev falls below this.
    pub convergence_rel_change: f64,
    pub method: IcpMethod,
    /// Surface-covariance regularizer along the normal, in (0, 1).
    pub gicp_epsilon: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_correspondence_distance: 0.05,
            max_iterations: 50,
            convergence_rel_change: 1e-6,
            method: IcpMethod::PointToPlane,
            gicp_epsilon: 1e-3,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_correspondence_distance > 0.0) {
            return Err(Error::InvalidParameter(
                "max_correspondence_distance must be > 0".into(),
            ));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.gicp_epsilon > 0.0 && self.gicp_epsilon < 1.0) {
            return Err(Error::InvalidParameter(
                "gicp_epsilon must lie in (0, 1)".into(),
            ));
        }
        if !(self.convergence_rel_change >= 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_rel_change must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Index pair (source point, target point).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Correspondence {
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    /// Maps source-frame points into the target frame.
    pub transform: RigidTransform,
    /// Inlier fraction of the source cloud at convergence.
    pub fitness: f64,
    /// Euclidean RMSE over inlier correspondences.
    pub inlier_rmse: f64,
    pub iterations_used: usize,
    /// Gauss-Newton approximate Hessian at convergence.
    pub information: Matrix6<f64>,
}

/// Observation hook: called once per iteration with the working
/// correspondence set before the pose update.
pub type IcpObserver<'a> = &'a mut dyn FnMut(usize, &RigidTransform, &[Correspondence]);

pub fn icp_point_to_plane(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    let params = IcpParams {
        method: IcpMethod::PointToPlane,
        ..*params
    };
    icp_with_observer(source, target, init, &params, None)
}

pub fn icp_generalized(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    let params = IcpParams {
        method: IcpMethod::Generalized,
        ..*params
    };
    icp_with_observer(source, target, init, &params, None)
}

/// Full ICP loop with an optional per-iteration observer.
pub fn icp_with_observer(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
    mut observer: Option<IcpObserver<'_>>,
) -> Result<RegistrationResult> {
    params.validate()?;
    if source.is_empty() {
        return Err(Error::EmptyInput("source cloud is empty"));
    }
    if target.is_empty() {
        return Err(Error::EmptyInput("target cloud is empty"));
    }

    let (source, target) = match params.method {
        IcpMethod::PointToPlane => {
            if target.normals.is_none() {
                return Err(Error::MissingNormals("target"));
            }
            (source.clone(), target.clone())
        }
        IcpMethod::Generalized => (
            ensure_normals(source)?,
            ensure_normals(target)?,
        ),
    };

    // Surface covariances for the generalized variant:
    // C = R_n diag(eps, 1, 1) R_n' = I - (1 - eps) n n'.
    let (cov_source, cov_target) = match params.method {
        IcpMethod::Generalized => (
            Some(surface_covariances(&source, params.gicp_epsilon)),
            Some(surface_covariances(&target, params.gicp_epsilon)),
        ),
        IcpMethod::PointToPlane => (None, None),
    };

    let tree = KdTree::build(&target)?;
    let mut transform = *init;
    let mut correspondences = find_correspondences(&source, &target, &tree, &transform, &params);
    if correspondences.is_empty() {
        return Err(Error::NoOverlap(params.max_correspondence_distance));
    }

    let mut prev_rmse = f64::INFINITY;
    let mut iterations_used = 0;
    for iteration in 0..params.max_iterations {
        iterations_used = iteration + 1;
        if let Some(obs) = observer.as_mut() {
            obs(iteration, &transform, &correspondences);
        }

        transform = match params.method {
            IcpMethod::PointToPlane => {
                step_point_to_plane(&source, &target, &correspondences, &transform)
            }
            IcpMethod::Generalized => step_generalized(
                &source,
                &target,
                cov_source.as_ref().unwrap(),
                cov_target.as_ref().unwrap(),
                &correspondences,
                &transform,
            ),
        };

        let next = find_correspondences(&source, &target, &tree, &transform, &params);
        if next.is_empty() {
            break;
        }
        let rmse = euclidean_rmse(&source, &target, &next, &transform);
        correspondences = next;
        let rel = (prev_rmse - rmse).abs() / prev_rmse.max(1e-300);
        if rel < params.convergence_rel_change {
            break;
        }
        prev_rmse = rmse;
    }

    let transform = transform.renormalized();
    let fitness = correspondences.len() as f64 / source.len() as f64;
    let inlier_rmse = euclidean_rmse(&source, &target, &correspondences, &transform);
    let information = match params.method {
        IcpMethod::PointToPlane => {
            point_to_plane_hessian(&source, &target, &correspondences, &transform)
        }
        IcpMethod::Generalized => generalized_hessian(
            &source,
            &target,
            cov_source.as_ref().unwrap(),
            cov_target.as_ref().unwrap(),
            &correspondences,
            &transform,
        ),
    };

    Ok(RegistrationResult {
        transform,
        fitness,
        inlier_rmse,
        iterations_used,
        information,
    })
}

fn ensure_normals(cloud: &PointCloud) -> Result<PointCloud> {
    if cloud.normals.is_some() {
        Ok(cloud.clone())
    } else {
        let k = 30.min(cloud.len());
        estimate_normals(cloud, k.max(3), None)
    }
}

/// `C = I - (1 - eps) n n'` per point.
pub fn surface_covariances(cloud: &PointCloud, epsilon: f64) -> Vec<Matrix3<f64>> {
    let normals = cloud
        .normals
        .as_ref()
        .expect("surface covariances need normals");
    normals
        .iter()
        .map(|n| Matrix3::identity() - (1.0 - epsilon) * n * n.transpose())
        .collect()
}

/// Nearest neighbor inside the cutoff; the generalized method also
/// requires normal agreement when both clouds carry normals.
pub fn find_correspondences(
    source: &PointCloud,
    target: &PointCloud,
    target_tree: &KdTree,
    transform: &RigidTransform,
    params: &IcpParams,
) -> Vec<Correspondence> {
    let filter_normals =
        params.method == IcpMethod::Generalized && source.has_normals() && target.has_normals();
    let mut out = Vec::with_capacity(source.len());
    for (s, p) in source.points.iter().enumerate() {
        let moved = transform.transform_point(p);
        let (t, dist) = target_tree.nearest(&moved);
        if dist > params.max_correspondence_distance {
            continue;
        }
        if filter_normals {
            let n_s = transform.rotation * source.normals.as_ref().unwrap()[s];
            let n_t = target.normals.as_ref().unwrap()[t];
            if n_s.dot(&n_t) <= 0.0 {
                continue;
            }
        }
        out.push(Correspondence { source: s, target: t });
    }
    out
}

pub fn euclidean_rmse(
    source: &PointCloud,
    target: &PointCloud,
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> f64 {
    if correspondences.is_empty() {
        return 0.0;
    }
    let sum: f64 = correspondences
        .iter()
        .map(|c| {
            let moved = transform.transform_point(&source.points[c.source]);
            (moved - target.points[c.target]).norm_squared()
        })
        .sum();
    (sum / correspondences.len() as f64).sqrt()
}

/// Sum of squared point-to-plane residuals on a frozen correspondence set.
pub fn point_to_plane_objective(
    source: &PointCloud,
    target: &PointCloud,
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> f64 {
    let normals = target.normals.as_ref().expect("target normals required");
    correspondences
        .iter()
        .map(|c| {
            let moved = transform.transform_point(&source.points[c.source]);
            let r = normals[c.target].dot(&(moved - target.points[c.target]));
            r * r
        })
        .sum()
}

/// Mahalanobis plane-to-plane objective on a frozen correspondence set
/// with covariances held at `transform`'s rotation.
pub fn generalized_objective(
    source: &PointCloud,
    target: &PointCloud,
    cov_source: &[Matrix3<f64>],
    cov_target: &[Matrix3<f64>],
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> f64 {
    correspondences
        .iter()
        .map(|c| {
            let m = mahalanobis_weight(
                &cov_source[c.source],
                &cov_target[c.target],
                &transform.rotation,
            );
            let d = target.points[c.target]
                - transform.transform_point(&source.points[c.source]);
            (d.transpose() * m * d)[(0, 0)]
        })
        .sum()
}

fn mahalanobis_weight(
    cov_source: &Matrix3<f64>,
    cov_target: &Matrix3<f64>,
    rotation: &Matrix3<f64>,
) -> Matrix3<f64> {
    let combined = cov_target + rotation * cov_source * rotation.transpose();
    combined
        .try_inverse()
        .expect("combined surface covariance is positive definite")
}

/// One damped Gauss-Newton step with backtracking on the frozen-set
/// point-to-plane objective.
fn step_point_to_plane(
    source: &PointCloud,
    target: &PointCloud,
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> RigidTransform {
    let normals = target.normals.as_ref().unwrap();
    let mut h = Matrix6::<f64>::zeros();
    let mut g = Vector6::<f64>::zeros();
    for c in correspondences {
        let x = transform.transform_point(&source.points[c.source]);
        let n = normals[c.target];
        let r = n.dot(&(x - target.points[c.target]));
        let jw = x.coords.cross(&n);
        let j = Vector6::new(jw.x, jw.y, jw.z, n.x, n.y, n.z);
        h += j * j.transpose();
        g += j * r;
    }
    let objective =
        |t: &RigidTransform| point_to_plane_objective(source, target, correspondences, t);
    apply_damped_step(&h, &g, transform, objective)
}

fn step_generalized(
    source: &PointCloud,
    target: &PointCloud,
    cov_source: &[Matrix3<f64>],
    cov_target: &[Matrix3<f64>],
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> RigidTransform {
    let mut h = Matrix6::<f64>::zeros();
    let mut g = Vector6::<f64>::zeros();
    let mut weights = Vec::with_capacity(correspondences.len());
    for c in correspondences {
        let m = mahalanobis_weight(
            &cov_source[c.source],
            &cov_target[c.target],
            &transform.rotation,
        );
        weights.push(m);
        let x = transform.transform_point(&source.points[c.source]);
        let d = target.points[c.target] - x;
        // d(xi) = d0 + J xi with J = [[x]x | -I] under left perturbation
        // of the moved point.
        let mut j = nalgebra::Matrix3x6::<f64>::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&se3::skew(&x.coords));
        j.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(-Matrix3::identity()));
        h += j.transpose() * m * j;
        g += j.transpose() * m * d;
    }
    let objective = |t: &RigidTransform| {
        correspondences
            .iter()
            .zip(&weights)
            .map(|(c, m)| {
                let d = target.points[c.target]
                    - t.transform_point(&source.points[c.source]);
                (d.transpose() * *m * d)[(0, 0)]
            })
            .sum()
    };
    apply_damped_step(&h, &g, transform, objective)
}

/// Rank-revealing Gauss-Newton solve: eigendirections of `H` with
/// curvature below `rel_tol` of the largest receive exactly zero step, so
/// unobservable motions (planar or extruded geometry, gauge freedoms)
/// never drift on noise gradients.
pub(crate) fn solve_truncated(h: &Matrix6<f64>, g: &Vector6<f64>) -> Vector6<f64> {
    let eigen = h.symmetric_eigen();
    let max_eval = eigen.eigenvalues.amax();
    if max_eval <= 0.0 {
        return Vector6::zeros();
    }
    let cutoff = 1e-9 * max_eval;
    let mut delta = Vector6::zeros();
    for k in 0..6 {
        let lambda = eigen.eigenvalues[k];
        if lambda > cutoff {
            let v = eigen.eigenvectors.column(k);
            delta += v * (-(v.dot(g)) / lambda);
        }
    }
    delta
}

/// One Gauss-Newton step with backtracking on the frozen objective.
fn apply_damped_step<F: Fn(&RigidTransform) -> f64>(
    h: &Matrix6<f64>,
    g: &Vector6<f64>,
    transform: &RigidTransform,
    objective: F,
) -> RigidTransform {
    let before = objective(transform);
    let delta = solve_truncated(h, g);
    let mut alpha = 1.0;
    for _ in 0..24 {
        let candidate = se3::exp(&(delta * alpha)).compose(transform);
        if objective(&candidate) <= before {
            return candidate;
        }
        alpha /= 2.0;
    }
    *transform
}

fn point_to_plane_hessian(
    source: &PointCloud,
    target: &PointCloud,
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> Matrix6<f64> {
    let normals = target.normals.as_ref().unwrap();
    let mut h = Matrix6::<f64>::zeros();
    for c in correspondences {
        let x = transform.transform_point(&source.points[c.source]);
        let n = normals[c.target];
        let jw = x.coords.cross(&n);
        let j = Vector6::new(jw.x, jw.y, jw.z, n.x, n.y, n.z);
        h += j * j.transpose();
    }
    h
}

fn generalized_hessian(
    source: &PointCloud,
    _target: &PointCloud,
    cov_source: &[Matrix3<f64>],
    cov_target: &[Matrix3<f64>],
    correspondences: &[Correspondence],
    transform: &RigidTransform,
) -> Matrix6<f64> {
    let mut h = Matrix6::<f64>::zeros();
    for c in correspondences {
        let m = mahalanobis_weight(
            &cov_source[c.source],
            &cov_target[c.target],
            &transform.rotation,
        );
        let x = transform.transform_point(&source.points[c.source]);
        let mut j = nalgebra::Matrix3x6::<f64>::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&se3::skew(&x.coords));
        j.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(-Matrix3::identity()));
        h += j.transpose() * m * j;
    }
    h
}
