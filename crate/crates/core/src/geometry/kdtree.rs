//! Exact nearest-neighbor index.
//!
//! Balanced KD-tree with deterministic construction and tie-breaking:
//! results are identical to an exhaustive linear scan, with equal
//! distances resolved toward the lowest point index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Point3;

use crate::error::{Error, Result};

use super::{dist_sq, PointCloud};

#[derive(Debug, Clone)]
struct Node {
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

/// Immutable spatial index over a point cloud.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3<f64>>,
    nodes: Vec<Node>,
    root: i32,
}

/// Max-heap entry ordered by (distance², index); the lexicographically
/// largest pair is the current worst candidate.
#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl KdTree {
    /// Builds the index. Errors on an empty cloud.
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty point cloud"));
        }
        let points = cloud.points.clone();
        let mut indices: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_recursive(&points, &mut indices[..], &mut nodes);
        Ok(Self {
            points,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points to `query`, sorted ascending by
    /// (distance, index). `k` is clamped to the cloud size.
    pub fn knn(&self, query: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(self.root, query, k, &mut heap);
        let mut out: Vec<(usize, f64)> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.d2.sqrt()))
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn knn_visit(
        &self,
        node_id: i32,
        query: &Point3<f64>,
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if node_id < 0 {
            return;
        }
        let node = &self.nodes[node_id as usize];
        let index = node.point as usize;
        let d2 = dist_sq(query, &self.points[index]);
        let candidate = Candidate { d2, index };
        if heap.len() < k {
            heap.push(candidate);
        } else if candidate < *heap.peek().unwrap() {
            heap.push(candidate);
            heap.pop();
        }

        let axis = node.axis as usize;
        let diff = query[axis] - self.points[index][axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.knn_visit(near, query, k, heap);
        // Descend on equality too: a tied far-side point with a lower
        // index must still displace the current worst.
        let must_visit = heap.len() < k || diff * diff <= heap.peek().unwrap().d2;
        if must_visit {
            self.knn_visit(far, query, k, heap);
        }
    }

    /// All points within `radius` (closed ball), sorted ascending by
    /// (distance, index).
    pub fn radius(&self, query: &Point3<f64>, radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let r2 = radius * radius;
        self.radius_visit(self.root, query, radius, r2, &mut out);
        out.sort_by(|a: &(usize, f64), b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn radius_visit(
        &self,
        node_id: i32,
        query: &Point3<f64>,
        radius: f64,
        r2: f64,
        out: &mut Vec<(usize, f64)>,
    ) {
        if node_id < 0 {
            return;
        }
        let node = &self.nodes[node_id as usize];
        let index = node.point as usize;
        let d2 = dist_sq(query, &self.points[index]);
        if d2 <= r2 {
            out.push((index, d2.sqrt()));
        }
        let axis = node.axis as usize;
        let diff = query[axis] - self.points[index][axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.radius_visit(near, query, radius, r2, out);
        if diff.abs() <= radius {
            self.radius_visit(far, query, radius, r2, out);
        }
    }

    /// Nearest point to `query` (lowest index on exact ties).
    pub fn nearest(&self, query: &Point3<f64>) -> (usize, f64) {
        self.knn(query, 1)[0]
    }
}

fn build_recursive(points: &[Point3<f64>], indices: &mut [u32], nodes: &mut Vec<Node>) -> i32 {
    if indices.is_empty() {
        return -1;
    }
    // Split along the widest extent; lowest axis wins ties.
    let mut min = points[indices[0] as usize];
    let mut max = min;
    for &i in indices.iter() {
        let p = points[i as usize];
        for axis in 0..3 {
            if p[axis] < min[axis] {
                min[axis] = p[axis];
            }
            if p[axis] > max[axis] {
                max[axis] = p[axis];
            }
        }
    }
    let mut axis = 0usize;
    let mut extent = max[0] - min[0];
    for a in 1..3 {
        if max[a] - min[a] > extent {
            extent = max[a] - min[a];
            axis = a;
        }
    }

    let mid = indices.len() / 2;
    indices.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let point = indices[mid];

    let node_id = nodes.len() as i32;
    nodes.push(Node {
        point,
        axis: axis as u8,
        left: -1,
        right: -1,
    });
    let (lo, rest) = indices.split_at_mut(mid);
    let hi = &mut rest[1..];
    let left = build_recursive(points, lo, nodes);
    let right = build_recursive(points, hi, nodes);
    nodes[node_id as usize].left = left;
    nodes[node_id as usize].right = right;
    node_id
}

/// Exhaustive-scan reference for the same queries; shared by tests and
/// the acceptance oracle suite.
pub fn linear_knn(cloud: &PointCloud, query: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, dist_sq(query, p)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k.min(cloud.len()));
    all.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
}
