//! Multiview point cloud registration.
//!
//! Pairwise alignment by point-to-plane or generalized (plane-to-plane)
//! ICP, joint alignment of many clouds at once, and robust pose-graph
//! optimization with loop-closure pruning. [`register_multiview`] wires
//! the three pipeline variants behind one call.

mod global_icp;
mod icp;
mod pose_graph;
pub mod se3;

pub use global_icp::global_icp;
pub use icp::{
    euclidean_rmse, find_correspondences, generalized_objective, icp_generalized,
    icp_point_to_plane, icp_with_observer, point_to_plane_objective, surface_covariances,
    Correspondence, IcpMethod, IcpObserver, IcpParams, RegistrationResult,
};
pub use pose_graph::{
    build_pose_graph, optimize_pose_graph, EdgeKind, PoseGraph, PoseGraphEdge, PoseGraphNode,
    PoseGraphParams, PoseGraphSolution,
};

use crate::error::Result;
use crate::geometry::{PointCloud, RigidTransform};

/// The three multiview pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiviewMethod {
    /// One joint least-squares over all poses (point-to-plane residuals).
    GlobalIcp,
    /// Pose graph with point-to-plane pairwise registration.
    PoseGraph,
    /// Pose graph with generalized (normal-aware) pairwise registration.
    RefinedPoseGraph,
}

impl MultiviewMethod {
    pub const ALL: [MultiviewMethod; 3] = [
        MultiviewMethod::GlobalIcp,
        MultiviewMethod::PoseGraph,
        MultiviewMethod::RefinedPoseGraph,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MultiviewMethod::GlobalIcp => "global-icp",
            MultiviewMethod::PoseGraph => "pose-graph",
            MultiviewMethod::RefinedPoseGraph => "refined-pose-graph",
        }
    }
}

/// Runs the selected pipeline and returns one pose per cloud, expressed
/// in the world frame of `init_poses` (cloud 0 anchors the gauge).
pub fn register_multiview(
    clouds: &[PointCloud],
    init_poses: &[RigidTransform],
    method: MultiviewMethod,
    params: &PoseGraphParams,
) -> Result<Vec<RigidTransform>> {
    match method {
        MultiviewMethod::GlobalIcp => {
            let icp = IcpParams {
                method: IcpMethod::PointToPlane,
                ..params.icp_params()
            };
            global_icp(clouds, init_poses, &icp, params.voxel_size)
        }
        MultiviewMethod::PoseGraph | MultiviewMethod::RefinedPoseGraph => {
            let pairwise = PoseGraphParams {
                method: if method == MultiviewMethod::PoseGraph {
                    IcpMethod::PointToPlane
                } else {
                    IcpMethod::Generalized
                },
                ..*params
            };
            let graph = build_pose_graph(clouds, init_poses, &pairwise)?;
            let solution = optimize_pose_graph(&graph, pairwise.edge_prune_threshold())?;
            // Graph poses live in the node-0 gauge; re-anchor to the
            // initial world frame.
            Ok(solution
                .poses
                .iter()
                .map(|p| init_poses[0].compose(p))
                .collect())
        }
    }
}
