//! Virtual structured-light scanner.
//!
//! Simulates a depth camera by ray casting a ground-truth mesh: viewpoints
//! come from Poisson-disc sampling on a sphere around the object, each
//! partial scan is expressed in its camera frame with an exact
//! camera-to-world pose, and poses can be perturbed by bounded random
//! rigid transforms to emulate initial-alignment error.

mod bvh;
mod poisson;
mod render;

pub use bvh::{brute_force_raycast, closest_point_on_triangle, Bvh, Ray, RayHit};
pub use poisson::{poisson_viewpoints, select_viewpoints};
pub use render::{look_at, render_scan, render_scan_with_bvh};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, RigidTransform};
use crate::rng::SeededRng;

/// Pinhole depth-camera model. Defaults mirror a 1920x1200 structured
/// light sensor with a 38.70 x 24.75 degree field of view and a
/// 350-700 mm depth of field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    pub fov_x_deg: f64,
    pub fov_y_deg: f64,
    pub dof_near: f64,
    pub dof_far: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 1920,
            height: 1200,
            fov_x_deg: 38.70,
            fov_y_deg: 24.75,
            dof_near: 0.350,
            dof_far: 0.700,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("camera resolution must be positive".into()));
        }
        for fov in [self.fov_x_deg, self.fov_y_deg] {
            if !(0.0 < fov && fov < 180.0) {
                return Err(Error::InvalidParameter(format!(
                    "field of view {fov} degrees out of (0, 180)"
                )));
            }
        }
        if !(0.0 < self.dof_near && self.dof_near < self.dof_far) {
            return Err(Error::InvalidParameter(format!(
                "depth of field [{}, {}] must satisfy 0 < near < far",
                self.dof_near, self.dof_far
            )));
        }
        Ok(())
    }

    /// Viewpoint-sphere radius that centers the object in the DOF band.
    pub fn mid_range(&self) -> f64 {
        0.5 * (self.dof_near + self.dof_far)
    }

    pub(crate) fn tan_half_fov(&self) -> (f64, f64) {
        (
            (self.fov_x_deg.to_radians() / 2.0).tan(),
            (self.fov_y_deg.to_radians() / 2.0).tan(),
        )
    }
}

/// One partial scan: the cloud in camera frame plus its exact and
/// perturbed camera-to-world poses.
#[derive(Debug, Clone)]
pub struct ScanRecord {
    pub cloud: PointCloud,
    pub gt_pose: RigidTransform,
    pub perturbed_pose: RigidTransform,
}

/// A set of partial scans of one mesh.
#[derive(Debug, Clone)]
pub struct ScanSet {
    pub records: Vec<ScanRecord>,
    pub mesh_label: String,
    pub seed: u64,
}

impl ScanSet {
    pub fn gt_poses(&self) -> Vec<RigidTransform> {
        self.records.iter().map(|r| r.gt_pose).collect()
    }

    pub fn perturbed_poses(&self) -> Vec<RigidTransform> {
        self.records.iter().map(|r| r.perturbed_pose).collect()
    }

    pub fn clouds(&self) -> Vec<PointCloud> {
        self.records.iter().map(|r| r.cloud.clone()).collect()
    }
}

/// Rigidly disturbs each scan in the world frame: the perturbation
/// composes on the left of the ground-truth pose (`delta * gt`), which is
/// what "rigidly transforming a scan" means. Translation direction is
/// uniform on the sphere with magnitude uniform in `translation_mm`;
/// rotation axis uniform with angle uniform in `rotation_deg`.
pub fn perturb_poses(
    scans: &ScanSet,
    translation_mm: (f64, f64),
    rotation_deg: (f64, f64),
    seed: u64,
) -> Result<ScanSet> {
    for (lo, hi) in [translation_mm, rotation_deg] {
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "perturbation bounds [{lo}, {hi}] must satisfy 0 <= lo <= hi"
            )));
        }
    }
    let mut rng = SeededRng::derive(seed, "pose-perturbation");
    let records = scans
        .records
        .iter()
        .map(|record| {
            let t_dir = rng.unit_vector();
            let t_mag = rng.uniform_in(translation_mm.0, translation_mm.1) / 1000.0;
            let axis = rng.unit_vector();
            let angle = rng.uniform_in(rotation_deg.0, rotation_deg.1).to_radians();
            let delta = RigidTransform::from_axis_angle(&axis, angle, t_dir * t_mag);
            ScanRecord {
                cloud: record.cloud.clone(),
                gt_pose: record.gt_pose,
                perturbed_pose: delta.compose(&record.gt_pose),
            }
        })
        .collect();
    Ok(ScanSet {
        records,
        mesh_label: scans.mesh_label.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn dummy_set(n: usize) -> ScanSet {
        let records = (0..n)
            .map(|i| ScanRecord {
                cloud: PointCloud::from_points(vec![nalgebra::Point3::origin()]),
                gt_pose: RigidTransform::from_translation(Vector3::new(i as f64, 0.0, 0.0)),
                perturbed_pose: RigidTransform::identity(),
            })
            .collect();
        ScanSet {
            records,
            mesh_label: "dummy".into(),
            seed: 0,
        }
    }

    #[test]
    fn zero_bounds_leave_poses_unchanged() {
        let set = dummy_set(4);
        let out = perturb_poses(&set, (0.0, 0.0), (0.0, 0.0), 5).unwrap();
        for r in &out.records {
            assert_eq!(r.perturbed_pose, r.gt_pose);
        }
    }

    #[test]
    fn translation_magnitude_stays_in_bounds() {
        let set = dummy_set(32);
        let out = perturb_poses(&set, (10.0, 15.0), (0.0, 0.0), 9).unwrap();
        for r in &out.records {
            let delta = r.perturbed_pose.compose(&r.gt_pose.inverse());
            let norm = delta.translation.norm();
            assert!((0.010..=0.015).contains(&norm), "|t| = {norm}");
        }
    }

    #[test]
    fn rotation_angle_round_trips_through_trace() {
        let set = dummy_set(32);
        let out = perturb_poses(&set, (0.0, 0.0), (3.0, 6.0), 11).unwrap();
        for r in &out.records {
            let delta = r.perturbed_pose.compose(&r.gt_pose.inverse());
            let angle = delta.rotation_angle().to_degrees();
            assert!((3.0 - 1e-9..=6.0 + 1e-9).contains(&angle), "angle {angle}");
        }
    }

    #[test]
    fn same_seed_same_perturbation() {
        let set = dummy_set(8);
        let a = perturb_poses(&set, (1.0, 3.0), (1.0, 3.0), 21).unwrap();
        let b = perturb_poses(&set, (1.0, 3.0), (1.0, 3.0), 21).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.perturbed_pose, y.perturbed_pose);
        }
    }
}
