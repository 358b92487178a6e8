//! Pinhole ray-cast rendering of partial scans.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, RigidTransform, TriangleMesh};

use super::bvh::{Bvh, Ray};
use super::CameraModel;

/// Casts one pinhole ray per `stride`-th pixel and keeps the nearest hit
/// whose camera-frame depth lies inside the depth of field. Points are in
/// the camera frame (x right, y down, z forward); normals come from the
/// hit triangle, flipped toward the camera.
pub fn render_scan(
    mesh: &TriangleMesh,
    camera_pose: &RigidTransform,
    cam: &CameraModel,
    stride: u32,
) -> Result<PointCloud> {
    let bvh = Bvh::build(mesh)?;
    render_scan_with_bvh(mesh, &bvh, camera_pose, cam, stride)
}

/// [`render_scan`] against a prebuilt BVH (reuse across viewpoints).
pub fn render_scan_with_bvh(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    camera_pose: &RigidTransform,
    cam: &CameraModel,
    stride: u32,
) -> Result<PointCloud> {
    cam.validate()?;
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let (tan_x, tan_y) = cam.tan_half_fov();
    let fx = cam.width as f64 / 2.0 / tan_x;
    let fy = cam.height as f64 / 2.0 / tan_y;
    let cx = cam.width as f64 / 2.0;
    let cy = cam.height as f64 / 2.0;

    let rows: Vec<u32> = (0..cam.height).step_by(stride as usize).collect();
    let per_row: Vec<(Vec<Point3<f64>>, Vec<Vector3<f64>>)> = rows
        .par_iter()
        .map(|&v| {
            let mut points = Vec::new();
            let mut normals = Vec::new();
            for u in (0..cam.width).step_by(stride as usize) {
                let dir_cam = Vector3::new(
                    (u as f64 + 0.5 - cx) / fx,
                    (v as f64 + 0.5 - cy) / fy,
                    1.0,
                )
                .normalize();
                let ray = Ray {
                    origin: Point3::from(camera_pose.translation),
                    direction: camera_pose.rotation * dir_cam,
                };
                if let Some(hit) = bvh.raycast(&ray) {
                    let depth = hit.t * dir_cam.z;
                    if depth >= cam.dof_near && depth <= cam.dof_far {
                        let p_cam = Point3::from(dir_cam * hit.t);
                        let mut n_cam =
                            camera_pose.rotation.transpose() * mesh.normal(hit.triangle);
                        if n_cam.dot(&p_cam.coords) > 0.0 {
                            n_cam = -n_cam;
                        }
                        points.push(p_cam);
                        normals.push(n_cam);
                    }
                }
            }
            (points, normals)
        })
        .collect();

    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (p, n) in per_row {
        points.extend(p);
        normals.extend(n);
    }
    if points.is_empty() {
        return Err(Error::EmptyScan);
    }
    Ok(PointCloud {
        points,
        normals: Some(normals),
        covariances: None,
    })
}

/// Camera-to-world pose at `position` looking toward `target`.
///
/// Up-vector convention: world +z projected into the view plane; +x when
/// looking along ±z. Camera axes are x right, y down, z forward.
pub fn look_at(position: &Point3<f64>, target: &Point3<f64>) -> RigidTransform {
    let forward = (target - position).normalize();
    let world_up = Vector3::z();
    let up_ref = if forward.cross(&world_up).norm() < 1e-9 {
        Vector3::x()
    } else {
        world_up
    };
    let up_proj = (up_ref - forward * forward.dot(&up_ref)).normalize();
    // Image rows grow downward: y = -projected up, x completes the frame.
    let right = forward.cross(&up_proj).normalize();
    let down = -up_proj;
    let rotation = nalgebra::Matrix3::from_columns(&[right, down, forward]);
    RigidTransform::from_parts(rotation, position.coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::assert_relative_eq;

    fn facing_square(depth: f64, half: f64) -> TriangleMesh {
        // Square in the plane z = depth facing -z (toward a camera at the
        // origin looking along +z).
        let vertices = vec![
            Point3::new(-half, -half, depth),
            Point3::new(half, -half, depth),
            Point3::new(half, half, depth),
            Point3::new(-half, half, depth),
        ];
        TriangleMesh::new(vertices, vec![[0, 2, 1], [0, 3, 2]]).unwrap()
    }

    #[test]
    fn plane_at_half_meter_depth() {
        let mesh = facing_square(0.5, 0.2);
        let cloud = render_scan(
            &mesh,
            &RigidTransform::identity(),
            &CameraModel::default(),
            8,
        )
        .unwrap();
        assert!(!cloud.is_empty());
        for p in &cloud.points {
            assert_relative_eq!(p.z, 0.5, epsilon = 1e-9);
        }
        // Normals face the camera.
        for n in cloud.normals.as_ref().unwrap() {
            assert!(n.z < 0.0);
        }
    }

    #[test]
    fn target_before_dof_near_is_empty() {
        let mesh = facing_square(0.2, 0.5);
        let err = render_scan(
            &mesh,
            &RigidTransform::identity(),
            &CameraModel::default(),
            8,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyScan));
    }

    #[test]
    fn look_at_is_orthonormal_and_forward() {
        let eye = Point3::new(0.3, -0.4, 0.2);
        let target = Point3::new(0.0, 0.0, 0.0);
        let pose = look_at(&eye, &target);
        pose.validate().unwrap();
        let forward = pose.rotation.column(2);
        assert_relative_eq!(
            Vector3::from(forward),
            (target - eye).normalize(),
            epsilon = 1e-12
        );
        // Image y grows downward in world terms.
        assert!(pose.rotation.column(1)[2] < 0.0);
        // Looking straight down the z axis uses the +x fallback.
        let pose = look_at(&Point3::new(0.0, 0.0, 1.0), &target);
        pose.validate().unwrap();
    }

    #[test]
    fn scan_transformed_by_pose_lies_on_mesh() {
        let mesh = synth::inspection_target(32, 64).unwrap();
        let bvh = Bvh::build(&mesh).unwrap();
        let centroid = mesh.centroid().unwrap();
        let cam = CameraModel::default();
        let eye = centroid + Vector3::new(0.2, 0.3, 0.35).normalize() * cam.mid_range();
        let pose = look_at(&eye, &centroid);
        let cloud = render_scan_with_bvh(&mesh, &bvh, &pose, &cam, 16).unwrap();
        assert!(cloud.len() > 100);
        let world = crate::geometry::apply_transform(&cloud, &pose);
        for p in &world.points {
            let (_, _, dist) = bvh.closest_point(p);
            assert!(dist < 1e-6, "scan point {dist} m off the surface");
        }
    }

    #[test]
    fn stride_reduced_render_matches_brute_force_hits() {
        let mesh = synth::inspection_target(12, 24).unwrap();
        let cam = CameraModel {
            width: 64,
            height: 64,
            ..CameraModel::default()
        };
        let centroid = mesh.centroid().unwrap();
        let eye = centroid + Vector3::new(0.0, 0.0, 1.0) * cam.mid_range();
        let pose = look_at(&eye, &centroid);
        let bvh = Bvh::build(&mesh).unwrap();
        let fast = render_scan_with_bvh(&mesh, &bvh, &pose, &cam, 1).unwrap();

        // Brute-force oracle: same rays, exhaustive triangle sweep.
        let (tan_x, tan_y) = cam.tan_half_fov();
        let fx = cam.width as f64 / 2.0 / tan_x;
        let fy = cam.height as f64 / 2.0 / tan_y;
        let mut slow_points = Vec::new();
        for v in 0..cam.height {
            for u in 0..cam.width {
                let dir_cam = Vector3::new(
                    (u as f64 + 0.5 - cam.width as f64 / 2.0) / fx,
                    (v as f64 + 0.5 - cam.height as f64 / 2.0) / fy,
                    1.0,
                )
                .normalize();
                let ray = Ray {
                    origin: Point3::from(pose.translation),
                    direction: pose.rotation * dir_cam,
                };
                if let Some(hit) = super::super::bvh::brute_force_raycast(&mesh, &ray) {
                    let depth = hit.t * dir_cam.z;
                    if depth >= cam.dof_near && depth <= cam.dof_far {
                        slow_points.push(Point3::from(dir_cam * hit.t));
                    }
                }
            }
        }
        assert_eq!(fast.points.len(), slow_points.len());
        for (a, b) in fast.points.iter().zip(&slow_points) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
