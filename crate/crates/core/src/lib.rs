//! Multiview point cloud registration and surface deviation analysis.
//!
//! This crate covers the full synthetic inspection pipeline:
//!
//! - **geometry**: point clouds, triangle meshes, rigid transforms, exact
//!   KD-tree search, voxel downsampling, normal estimation, outlier
//!   filtering, and cropping.
//! - **io**: PLY (ASCII / binary little-endian), OBJ, binary STL, and JSON
//!   pose files.
//! - **synth**: procedural benchmark shapes with a known 0.5 m ground-truth
//!   offset and controlled perturbations (noise, holes, subsampling).
//! - **scanner**: a ray-cast depth camera that produces partial scans of a
//!   mesh from Poisson-disc viewpoints, with known and perturbed poses.
//! - **registration**: pairwise point-to-plane and generalized
//!   (plane-to-plane) ICP, joint multiview alignment, and robust pose-graph
//!   optimization with loop-closure pruning.
//! - **metrics**: cloud-to-cloud distances (Chamfer, Hausdorff, Earth
//!   Mover's), local plane fits (least-squares, quadratic, triangulated),
//!   and signed cloud-to-mesh distance with summary statistics.
//! - **evaluation**: reproducible registration and metric benchmarks
//!   emitting CSV tables.
//!
//! All randomness flows through explicit seeds; identical inputs produce
//! identical outputs on a given platform.

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod registration;
pub mod rng;
pub mod scanner;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Aabb, KdTree, PointCloud, RigidTransform, TriangleMesh};
