//! Viewpoint planning: Poisson-disc sampling on a sphere around the
//! object plus greedy coverage pruning.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, TriangleMesh};
use crate::rng::SeededRng;

use super::bvh::{Bvh, Ray};
use super::render::look_at;
use super::CameraModel;

/// Dart-throwing budget: attempts per accepted sample before giving up.
const MAX_CONSECUTIVE_REJECTS: usize = 2000;

/// Poisson-disc camera poses on the sphere of `radius` about the mesh
/// centroid, pairwise geodesic separation >= `min_separation`, each
/// looking at the centroid. Greedy pruning then keeps a minimal subset
/// that still sees every triangle (or stops when coverage cannot grow).
pub fn poisson_viewpoints(
    mesh: &TriangleMesh,
    cam: &CameraModel,
    radius: f64,
    min_separation: f64,
    seed: u64,
) -> Result<Vec<RigidTransform>> {
    let candidates = dart_throw(mesh, radius, min_separation, seed)?;
    let bvh = Bvh::build(mesh)?;
    let poses: Vec<RigidTransform> = candidates;
    let visibility: Vec<Vec<bool>> = poses
        .iter()
        .map(|pose| visible_triangles(mesh, &bvh, pose, cam))
        .collect();

    let selected = greedy_cover(&visibility, mesh.triangle_count(), poses.len());
    Ok(selected.into_iter().map(|i| poses[i]).collect())
}

/// Exactly `count` viewpoints: Poisson-disc candidates with a separation
/// adapted to the requested count, coverage-greedy ordering, then
/// truncation or padding with the remaining candidates (farthest-first).
pub fn select_viewpoints(
    mesh: &TriangleMesh,
    cam: &CameraModel,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<RigidTransform>> {
    if count == 0 {
        return Err(Error::InvalidParameter("viewpoint count must be >= 1".into()));
    }
    // Sphere area heuristic: cap-packing separation for ~3x oversampling.
    let oversample = (3 * count).max(8) as f64;
    let min_separation = radius * (4.0 / oversample).sqrt();
    let candidates = dart_throw(mesh, radius, min_separation, seed)?;
    if candidates.len() < count {
        return Err(Error::PlacementFailure(format!(
            "only {} candidate viewpoints for a request of {count}",
            candidates.len()
        )));
    }
    let bvh = Bvh::build(mesh)?;
    let visibility: Vec<Vec<bool>> = candidates
        .iter()
        .map(|pose| visible_triangles(mesh, &bvh, pose, cam))
        .collect();
    let mut order = greedy_cover(&visibility, mesh.triangle_count(), candidates.len());
    order.truncate(count);

    // Pad with unused candidates, farthest-first from the chosen set.
    while order.len() < count {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..candidates.len() {
            if order.contains(&i) {
                continue;
            }
            let nearest = order
                .iter()
                .map(|&j| (candidates[i].translation - candidates[j].translation).norm())
                .fold(f64::INFINITY, f64::min);
            if best.map_or(true, |(_, d)| nearest > d) {
                best = Some((i, nearest));
            }
        }
        match best {
            Some((i, _)) => order.push(i),
            None => break,
        }
    }
    if order.len() < count {
        return Err(Error::PlacementFailure(format!(
            "could not assemble {count} viewpoints"
        )));
    }
    // Scanning-path order: greedy nearest-neighbor chain so consecutive
    // scans overlap well (they become the odometry edges downstream).
    let mut path = vec![order[0]];
    let mut remaining: Vec<usize> = order[1..].to_vec();
    while !remaining.is_empty() {
        let last = *path.last().unwrap();
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                let da = (candidates[a].translation - candidates[last].translation).norm();
                let db = (candidates[b].translation - candidates[last].translation).norm();
                da.total_cmp(&db)
            })
            .unwrap();
        path.push(remaining.remove(pos));
    }
    Ok(path.into_iter().map(|i| candidates[i]).collect())
}

fn dart_throw(
    mesh: &TriangleMesh,
    radius: f64,
    min_separation: f64,
    seed: u64,
) -> Result<Vec<RigidTransform>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("viewpoint radius must be > 0".into()));
    }
    if !(min_separation > 0.0) {
        return Err(Error::InvalidParameter("min_separation must be > 0".into()));
    }
    let centroid = mesh
        .centroid()
        .ok_or(Error::EmptyInput("mesh has no triangles"))?;

    let mut rng = SeededRng::derive(seed, "viewpoints");
    let mut directions: Vec<nalgebra::Vector3<f64>> = Vec::new();
    let mut rejects = 0;
    while rejects < MAX_CONSECUTIVE_REJECTS {
        let dir = rng.unit_vector();
        // Geodesic separation on the sphere of given radius.
        let ok = directions.iter().all(|d| {
            let angle = d.dot(&dir).clamp(-1.0, 1.0).acos();
            radius * angle >= min_separation
        });
        if ok {
            directions.push(dir);
            rejects = 0;
        } else {
            rejects += 1;
        }
    }
    if directions.len() < 2 {
        return Err(Error::PlacementFailure(format!(
            "min_separation {min_separation} m leaves fewer than 2 viewpoints on the sphere"
        )));
    }
    Ok(directions
        .iter()
        .map(|dir| look_at(&(centroid + dir * radius), &centroid))
        .collect())
}

/// Frustum-and-visibility test per triangle: the centroid must project
/// inside the image and DOF band, and the first hit along its ray must be
/// the triangle itself.
fn visible_triangles(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    pose: &RigidTransform,
    cam: &CameraModel,
) -> Vec<bool> {
    let (tan_x, tan_y) = cam.tan_half_fov();
    let world_to_cam = pose.inverse();
    let origin = Point3::from(pose.translation);
    (0..mesh.triangle_count())
        .map(|t| {
            let target = mesh.centroid_of(t);
            let p_cam = world_to_cam.transform_point(&target);
            if p_cam.z < cam.dof_near || p_cam.z > cam.dof_far {
                return false;
            }
            if (p_cam.x / p_cam.z).abs() > tan_x || (p_cam.y / p_cam.z).abs() > tan_y {
                return false;
            }
            let dir = target - origin;
            let dist = dir.norm();
            let ray = Ray {
                origin,
                direction: dir / dist,
            };
            match bvh.raycast(&ray) {
                Some(hit) => hit.triangle == t || (hit.t - dist).abs() <= 1e-9 * dist.max(1.0),
                None => false,
            }
        })
        .collect()
}

/// Greedy set cover: repeatedly take the viewpoint that sees the most
/// uncovered triangles (lowest index on ties) until everything is covered
/// or no viewpoint helps. Returns viewpoint indices in selection order.
fn greedy_cover(visibility: &[Vec<bool>], triangles: usize, viewpoints: usize) -> Vec<usize> {
    let mut covered = vec![false; triangles];
    let mut used = vec![false; viewpoints];
    let mut order = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None; // (gain, index)
        for v in 0..viewpoints {
            if used[v] {
                continue;
            }
            let gain = visibility[v]
                .iter()
                .zip(&covered)
                .filter(|(vis, cov)| **vis && !**cov)
                .count();
            let better = match best {
                None => gain > 0,
                Some((g, _)) => gain > g,
            };
            if better {
                best = Some((gain, v));
            }
        }
        match best {
            Some((_, v)) => {
                used[v] = true;
                for (t, vis) in visibility[v].iter().enumerate() {
                    if *vis {
                        covered[t] = true;
                    }
                }
                order.push(v);
                if covered.iter().all(|c| *c) {
                    break;
                }
            }
            None => break,
        }
    }
    order
}
