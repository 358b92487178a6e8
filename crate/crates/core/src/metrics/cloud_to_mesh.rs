//! Signed cloud-to-mesh distance.

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{PointCloud, TriangleMesh};
use crate::scanner::Bvh;

use super::DistanceReport;

/// Signed nearest distance from every query point to the mesh surface:
/// positive on the side the minimizing triangle's normal points to
/// (outside for outward-wound meshes), negative on the other. The scalar
/// is the signed mean.
pub fn cloud_to_mesh(query: &PointCloud, mesh: &TriangleMesh) -> Result<DistanceReport> {
    if query.is_empty() {
        return Err(crate::error::Error::EmptyInput("query cloud is empty"));
    }
    let bvh = Bvh::build(mesh)?;
    let distances: Vec<f64> = query
        .points
        .par_iter()
        .map(|p| {
            let (triangle, closest, dist) = bvh.closest_point(p);
            let side = (p - closest).dot(&mesh.normal(triangle));
            if side < 0.0 {
                -dist
            } else {
                dist
            }
        })
        .collect();
    let scalar = distances.iter().sum::<f64>() / distances.len() as f64;
    Ok(DistanceReport::new(Some(distances.clone()), &distances, scalar))
}
