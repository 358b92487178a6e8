//! Point-to-plane distance through a local 2.5D mesh: k nearest
//! neighbors projected to their least-squares plane, Delaunay-triangulated
//! in 2D, lifted back to 3D, then a minimum point-to-triangle query.

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};
use crate::scanner::closest_point_on_triangle;

use super::plane::fit_local_plane;
use super::DistanceReport;

/// Bowyer-Watson Delaunay triangulation of 2D points (input order is the
/// insertion order; exact duplicates must be removed beforehand).
pub fn delaunay_2d(points: &[(f64, f64)]) -> Vec<[usize; 3]> {
    if points.len() < 3 {
        return Vec::new();
    }

    // Super-triangle comfortably containing everything.
    let (mut min_x, mut min_y) = points[0];
    let (mut max_x, mut max_y) = points[0];
    for &(x, y) in points {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-12);
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;
    let s0 = (cx - 30.0 * span, cy - 20.0 * span);
    let s1 = (cx + 30.0 * span, cy - 20.0 * span);
    let s2 = (cx, cy + 30.0 * span);

    let coord = |i: usize| -> (f64, f64) {
        match i {
            _ if i < points.len() => points[i],
            x if x == points.len() => s0,
            x if x == points.len() + 1 => s1,
            _ => s2,
        }
    };

    let mut triangles: Vec<[usize; 3]> =
        vec![[points.len(), points.len() + 1, points.len() + 2]];

    for p_idx in 0..points.len() {
        let p = coord(p_idx);
        let mut bad: Vec<usize> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            if in_circumcircle(coord(tri[0]), coord(tri[1]), coord(tri[2]), p) {
                bad.push(t);
            }
        }
        if bad.is_empty() {
            // Degenerate input (e.g. collinear so far); skip the point.
            continue;
        }
        // Boundary edges: edges of bad triangles not shared by two.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &t in &bad {
            let tri = triangles[t];
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if let Some(pos) = edges
                    .iter()
                    .position(|&(a, b)| (a, b) == (e.1, e.0) || (a, b) == e)
                {
                    edges.remove(pos);
                } else {
                    edges.push(e);
                }
            }
        }
        for &t in bad.iter().rev() {
            triangles.swap_remove(t);
        }
        for (a, b) in edges {
            if orient2d(coord(a), coord(b), p).abs() > 0.0 {
                triangles.push([a, b, p_idx]);
            }
        }
    }

    triangles
        .into_iter()
        .filter(|tri| tri.iter().all(|&i| i < points.len()))
        .collect()
}

fn orient2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Strict in-circumcircle test, orientation-corrected.
fn in_circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = orient2d(a, b, c);
    if orient == 0.0 {
        return false;
    }
    let m = |p: (f64, f64)| {
        let dx = p.0 - d.0;
        let dy = p.1 - d.1;
        (dx, dy, dx * dx + dy * dy)
    };
    let (ax, ay, aq) = m(a);
    let (bx, by, bq) = m(b);
    let (cx, cy, cq) = m(c);
    let det = ax * (by * cq - bq * cy) - ay * (bx * cq - bq * cx) + aq * (bx * cy - by * cx);
    if orient > 0.0 {
        det > 0.0
    } else {
        det < 0.0
    }
}

/// Distance from each query point to the triangulated 2.5D mesh of its k
/// nearest reference neighbors. Collinear neighborhoods are flagged (NaN).
pub fn plane_distance_triangulation(
    query: &PointCloud,
    reference: &PointCloud,
    k: usize,
) -> Result<DistanceReport> {
    if query.is_empty() {
        return Err(Error::EmptyInput("query cloud is empty"));
    }
    if k < 3 {
        return Err(Error::InvalidParameter(
            "triangulation needs k >= 3".into(),
        ));
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
            let plane = match fit_local_plane(&neighbors) {
                Some(plane) => plane,
                None => return f64::NAN, // collinear neighborhood
            };
            // Project to the plane frame, dropping exact 2D duplicates.
            let mut planar: Vec<(f64, f64)> = Vec::with_capacity(neighbors.len());
            let mut kept: Vec<usize> = Vec::with_capacity(neighbors.len());
            for (i, q) in neighbors.iter().enumerate() {
                let d = q.coords - plane.centroid;
                let uv = (d.dot(&plane.u), d.dot(&plane.v));
                if planar.iter().all(|&(x, y)| (x, y) != uv) {
                    planar.push(uv);
                    kept.push(i);
                }
            }
            let triangles = delaunay_2d(&planar);
            if triangles.is_empty() {
                return f64::NAN;
            }
            let mut best = f64::INFINITY;
            for tri in &triangles {
                let a = neighbors[kept[tri[0]]];
                let b = neighbors[kept[tri[1]]];
                let c = neighbors[kept[tri[2]]];
                let cp = closest_point_on_triangle(p, &a, &b, &c);
                best = best.min((p - cp).norm());
            }
            best
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
