//! Foundational geometry: clouds, meshes, poses, and spatial queries.

mod aabb;
mod eigen;
mod kdtree;
mod mesh;
mod ops;
mod point_cloud;
mod transform;

pub use aabb::Aabb;
pub use eigen::sym_eigen3;
pub use kdtree::{linear_knn, KdTree};
pub use mesh::TriangleMesh;
pub use ops::{
    apply_transform, crop, estimate_normals, statistical_outlier_filter, voxel_downsample,
};
pub use point_cloud::PointCloud;
pub use transform::RigidTransform;

/// Squared Euclidean distance, shared by the KD-tree and the exhaustive
/// scan oracle so both routes produce bit-identical values.
#[inline]
pub fn dist_sq(a: &nalgebra::Point3<f64>, b: &nalgebra::Point3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}
