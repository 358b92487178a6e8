//! Bounding-volume hierarchy over mesh triangles.
//!
//! Supports nearest-hit ray casting (Moller-Trumbore) and closest-point
//! queries. Both return exactly what a brute-force sweep over all
//! triangles returns, including the lowest-index rule on exact ties.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, TriangleMesh};

/// Determinant cutoff below which a ray is treated as parallel.
const RAY_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub triangle: usize,
    /// Ray parameter of the hit: `point = origin + t * direction`.
    pub t: f64,
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: triangle range into `order`; inner: child pair.
    content: NodeContent,
}

#[derive(Debug, Clone)]
enum NodeContent {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

/// Immutable triangle index for ray and proximity queries.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    triangles: Vec<[Point3<f64>; 3]>,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyInput("cannot build a BVH over an empty mesh"));
        }
        let triangles: Vec<[Point3<f64>; 3]> =
            (0..mesh.triangle_count()).map(|t| mesh.triangle(t)).collect();
        let centroids: Vec<Point3<f64>> = triangles
            .iter()
            .map(|[a, b, c]| Point3::from((a.coords + b.coords + c.coords) / 3.0))
            .collect();
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let mut nodes = Vec::new();
        build_node(&triangles, &centroids, &mut order, 0, triangles.len(), &mut nodes);
        Ok(Self {
            nodes,
            order,
            triangles,
        })
    }

    /// Nearest intersection along the ray, if any. Exact ties on the ray
    /// parameter resolve to the lowest triangle index.
    pub fn raycast(&self, ray: &Ray) -> Option<RayHit> {
        let inv_dir = Vector3::new(
            1.0 / ray.direction.x,
            1.0 / ray.direction.y,
            1.0 / ray.direction.z,
        );
        let mut best: Option<RayHit> = None;
        let mut stack = vec![0usize];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id];
            let t_cap = best.map_or(f64::INFINITY, |h| h.t);
            match node.bounds.ray_hit(&ray.origin, &inv_dir, t_cap) {
                // Entry at exactly t_cap can still contain a tying
                // lower-index triangle, so only prune strictly beyond.
                Some(_) => {}
                None => continue,
            }
            match &node.content {
                NodeContent::Leaf { start, end } => {
                    for &tri_idx in &self.order[*start..*end] {
                        let [a, b, c] = self.triangles[tri_idx];
                        if let Some(t) = ray_triangle(ray, &a, &b, &c) {
                            let better = match best {
                                None => true,
                                Some(h) => t < h.t || (t == h.t && tri_idx < h.triangle),
                            };
                            if better {
                                best = Some(RayHit {
                                    triangle: tri_idx,
                                    t,
                                });
                            }
                        }
                    }
                }
                NodeContent::Inner { left, right } => {
                    // Push far child first so the near one is processed
                    // first (ordering only affects speed, not results).
                    let dl = self.nodes[*left].bounds.dist_sq(&ray.origin);
                    let dr = self.nodes[*right].bounds.dist_sq(&ray.origin);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }

    /// Closest surface point to `query`: (triangle index, point, distance).
    /// Equal distances resolve to the lowest triangle index.
    pub fn closest_point(&self, query: &Point3<f64>) -> (usize, Point3<f64>, f64) {
        let mut best_d2 = f64::INFINITY;
        let mut best_tri = usize::MAX;
        let mut best_point = Point3::origin();
        let mut stack = vec![0usize];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id];
            if node.bounds.dist_sq(query) > best_d2 {
                continue;
            }
            match &node.content {
                NodeContent::Leaf { start, end } => {
                    for &tri_idx in &self.order[*start..*end] {
                        let [a, b, c] = self.triangles[tri_idx];
                        let candidate = closest_point_on_triangle(query, &a, &b, &c);
                        let d2 = (query - candidate).norm_squared();
                        if d2 < best_d2 || (d2 == best_d2 && tri_idx < best_tri) {
                            best_d2 = d2;
                            best_tri = tri_idx;
                            best_point = candidate;
                        }
                    }
                }
                NodeContent::Inner { left, right } => {
                    let dl = self.nodes[*left].bounds.dist_sq(query);
                    let dr = self.nodes[*right].bounds.dist_sq(query);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        (best_tri, best_point, best_d2.sqrt())
    }
}

fn build_node(
    triangles: &[[Point3<f64>; 3]],
    centroids: &[Point3<f64>],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    // `order` is always the full slice; [start, end) is this node's range.
    let slice = &order[start..end];
    let mut bounds = triangle_bounds(&triangles[slice[0]]);
    for &t in &slice[1..] {
        bounds = bounds.union(&triangle_bounds(&triangles[t]));
    }

    let node_id = nodes.len();
    nodes.push(Node {
        bounds,
        content: NodeContent::Leaf { start, end },
    });
    if end - start <= LEAF_SIZE {
        return node_id;
    }

    // Split on the widest centroid axis at the median.
    let mut cmin = centroids[slice[0]];
    let mut cmax = cmin;
    for &t in &slice[1..] {
        let c = centroids[t];
        for axis in 0..3 {
            cmin[axis] = cmin[axis].min(c[axis]);
            cmax[axis] = cmax[axis].max(c[axis]);
        }
    }
    let mut axis = 0;
    for a in 1..3 {
        if cmax[a] - cmin[a] > cmax[axis] - cmin[axis] {
            axis = a;
        }
    }
    if cmax[axis] - cmin[axis] == 0.0 {
        // All centroids coincide; keep as a (possibly large) leaf.
        return node_id;
    }

    let mid = (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    let left = build_node(triangles, centroids, order, start, start + mid, nodes);
    let right = build_node(triangles, centroids, order, start + mid, end, nodes);
    nodes[node_id].content = NodeContent::Inner { left, right };
    node_id
}

fn triangle_bounds(tri: &[Point3<f64>; 3]) -> Aabb {
    Aabb::from_points(tri).unwrap()
}

/// Moller-Trumbore intersection; returns the ray parameter for hits with
/// `t > 0` (closed on triangle edges).
fn ray_triangle(ray: &Ray, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = ray.direction.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < RAY_EPSILON {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = ray.origin - a;
    let u = tvec.dot(&pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = ray.direction.dot(&qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    (t > 0.0).then_some(t)
}

/// Reference nearest-hit: sweeps every triangle with the same
/// intersection routine the BVH uses.
pub fn brute_force_raycast(mesh: &TriangleMesh, ray: &Ray) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for tri_idx in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle(tri_idx);
        if let Some(t) = ray_triangle(ray, &a, &b, &c) {
            let better = match best {
                None => true,
                Some(h) => t < h.t || (t == h.t && tri_idx < h.triangle),
            };
            if better {
                best = Some(RayHit {
                    triangle: tri_idx,
                    t,
                });
            }
        }
    }
    best
}

/// Closest point on a triangle to `p` (Ericson's region decomposition).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + v * ab;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + w * ac;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
