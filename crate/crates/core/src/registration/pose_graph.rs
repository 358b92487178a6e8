//! Pose graph construction and robust global optimization.
//!
//! Nodes hold camera-to-world poses (node 0 pinned to the identity);
//! edges hold pairwise ICP results: consecutive scans become odometry
//! edges, non-consecutive pairs with enough inlier support become loop
//! closures. Optimization runs Levenberg-Marquardt on the stacked SE(3)
//! residuals `log(T_ij^-1 T_i^-1 T_j)` with per-edge line-process weights
//! that continuously disable inconsistent loop closures; after
//! convergence, loop closures whose translational residual exceeds the
//! prune threshold are dropped and the optimization re-runs once.
//! Odometry edges are never pruned.

use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{voxel_downsample, PointCloud, RigidTransform};

use super::icp::{icp_with_observer, IcpMethod, IcpParams};
use super::se3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Odometry,
    LoopClosure,
}

#[derive(Debug, Clone)]
pub struct PoseGraphEdge {
    pub from: usize,
    pub to: usize,
    /// Maps `to`-frame points into the `from` frame.
    pub relative: RigidTransform,
    pub information: Matrix6<f64>,
    pub kind: EdgeKind,
    /// Static confidence (pairwise inlier fraction).
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct PoseGraphNode {
    pub cloud_id: usize,
    pub pose: RigidTransform,
}

#[derive(Debug, Clone, Default)]
pub struct PoseGraph {
    pub nodes: Vec<PoseGraphNode>,
    pub edges: Vec<PoseGraphEdge>,
}

impl PoseGraph {
    /// Structural invariants: node 0 at identity, odometry edges between
    /// consecutive ids, loop closures elsewhere, symmetric PSD
    /// information.
    pub fn validate(&self) -> Result<()> {
        if let Some(first) = self.nodes.first() {
            if (first.pose.to_matrix() - nalgebra::Matrix4::identity()).norm() > 1e-9 {
                return Err(Error::InvalidParameter(
                    "pose graph node 0 must be the identity".into(),
                ));
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.from >= self.nodes.len() || edge.to >= self.nodes.len() {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} references a missing node"
                )));
            }
            let consecutive = edge.to == edge.from + 1;
            match edge.kind {
                EdgeKind::Odometry if !consecutive => {
                    return Err(Error::InvalidParameter(format!(
                        "odometry edge {e} connects non-consecutive nodes {} and {}",
                        edge.from, edge.to
                    )));
                }
                EdgeKind::LoopClosure if consecutive => {
                    return Err(Error::InvalidParameter(format!(
                        "loop-closure edge {e} connects consecutive nodes {} and {}",
                        edge.from, edge.to
                    )));
                }
                _ => {}
            }
            let asym = (edge.information - edge.information.transpose()).norm();
            if asym > 1e-6 * (1.0 + edge.information.norm()) {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} information matrix is not symmetric"
                )));
            }
            let eigen = edge.information.symmetric_eigen();
            if eigen.eigenvalues.iter().any(|&l| l < -1e-6) {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} information matrix is not PSD"
                )));
            }
        }
        Ok(())
    }
}

/// Parameters coupling the pose-graph pipeline to the voxel size:
/// the correspondence cutoff is `voxel_size * distance_multiplier` and
/// the prune threshold is `voxel_size / prune_divisor`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PoseGraphParams {
    pub voxel_size: f64,
    /// `m` in [1, 4].
    pub distance_multiplier: f64,
    /// `p` in [2, 4].
    pub prune_divisor: f64,
    pub method: IcpMethod,
    pub icp_max_iterations: usize,
    pub icp_convergence_rel_change: f64,
    pub gicp_epsilon: f64,
    /// Minimum pairwise fitness for keeping a loop-closure edge.
    pub fitness_floor: f64,
    /// Clouds smaller than this skip voxel downsampling (0 always
    /// downsamples).
    pub downsample_min_points: usize,
    /// Pairwise registration runs a multi-resolution prealignment ladder
    /// whose top cutoff is `voxel_size * coarse_multiplier` (each rung
    /// divides the cutoff by 4 down to the configured one); the rung
    /// result with the best fine-cutoff fitness seeds the final pass, and
    /// the untouched init always competes. 0 disables the ladder.
    #[serde(default = "default_coarse_multiplier")]
    pub coarse_multiplier: f64,
}

fn default_coarse_multiplier() -> f64 {
    16.0
}

impl Default for PoseGraphParams {
    fn default() -> Self {
        Self {
            voxel_size: 0.002,
            distance_multiplier: 2.0,
            prune_divisor: 3.0,
            method: IcpMethod::PointToPlane,
            icp_max_iterations: 50,
            icp_convergence_rel_change: 1e-6,
            gicp_epsilon: 1e-3,
            fitness_floor: 0.3,
            downsample_min_points: 100_000,
            coarse_multiplier: default_coarse_multiplier(),
        }
    }
}

impl PoseGraphParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0) {
            return Err(Error::InvalidParameter("voxel_size must be > 0".into()));
        }
        if !(1.0..=4.0).contains(&self.distance_multiplier) {
            return Err(Error::InvalidParameter(format!(
                "distance_multiplier {} outside [1, 4]",
                self.distance_multiplier
            )));
        }
        if !(2.0..=4.0).contains(&self.prune_divisor) {
            return Err(Error::InvalidParameter(format!(
                "prune_divisor {} outside [2, 4]",
                self.prune_divisor
            )));
        }
        if !(0.0..=1.0).contains(&self.fitness_floor) {
            return Err(Error::InvalidParameter("fitness_floor outside [0, 1]".into()));
        }
        self.icp_params().validate()
    }

    pub fn max_correspondence_distance(&self) -> f64 {
        self.voxel_size * self.distance_multiplier
    }

    pub fn edge_prune_threshold(&self) -> f64 {
        self.voxel_size / self.prune_divisor
    }

    pub fn icp_params(&self) -> IcpParams {
        IcpParams {
            max_correspondence_distance: self.max_correspondence_distance(),
            max_iterations: self.icp_max_iterations,
            convergence_rel_change: self.icp_convergence_rel_change,
            method: self.method,
            gicp_epsilon: self.gicp_epsilon,
        }
    }
}

/// Pairwise-registers every cloud pair (on voxel-downsampled copies),
/// turning consecutive pairs into odometry edges and sufficiently
/// confident non-consecutive pairs into loop closures. Node poses are the
/// odometry chain composition with node 0 at the identity.
pub fn build_pose_graph(
    clouds: &[PointCloud],
    init_poses: &[RigidTransform],
    params: &PoseGraphParams,
) -> Result<PoseGraph> {
    params.validate()?;
    if clouds.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "pose graph needs at least 2 clouds, got {}",
            clouds.len()
        )));
    }
    if clouds.len() != init_poses.len() {
        return Err(Error::SizeMismatch {
            left: clouds.len(),
            right: init_poses.len(),
        });
    }

    let reduced: Vec<PointCloud> = clouds
        .iter()
        .map(|c| {
            if c.len() >= params.downsample_min_points.max(1) {
                voxel_downsample(c, params.voxel_size)
            } else {
                Ok(c.clone())
            }
        })
        .collect::<Result<_>>()?;

    let icp_params = params.icp_params();
    let pairs: Vec<(usize, usize)> = (0..clouds.len())
        .flat_map(|i| ((i + 1)..clouds.len()).map(move |j| (i, j)))
        .collect();

    let results: Vec<(usize, usize, Result<super::icp::RegistrationResult>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let init = init_poses[i].inverse().compose(&init_poses[j]);
            let result = pairwise_with_ladder(&reduced[j], &reduced[i], &init, params, &icp_params);
            (i, j, result)
        })
        .collect();

    let mut edges = Vec::new();
    for (i, j, result) in results {
        let consecutive = j == i + 1;
        match result {
            Ok(r) => {
                if consecutive {
                    edges.push(PoseGraphEdge {
                        from: i,
                        to: j,
                        relative: r.transform,
                        information: r.information,
                        kind: EdgeKind::Odometry,
                        confidence: r.fitness,
                    });
                } else if r.fitness >= params.fitness_floor {
                    edges.push(PoseGraphEdge {
                        from: i,
                        to: j,
                        relative: r.transform,
                        information: r.information,
                        kind: EdgeKind::LoopClosure,
                        confidence: r.fitness,
                    });
                }
            }
            Err(err) if consecutive => {
                return Err(Error::GraphConstructionFailure(format!(
                    "odometry pair ({i}, {j}) failed: {err}"
                )));
            }
            Err(_) => {} // low-overlap loop pair: skip
        }
    }

    // Chain composition seeds the node poses.
    let mut nodes = Vec::with_capacity(clouds.len());
    nodes.push(PoseGraphNode {
        cloud_id: 0,
        pose: RigidTransform::identity(),
    });
    for k in 1..clouds.len() {
        let edge = edges
            .iter()
            .find(|e| e.kind == EdgeKind::Odometry && e.from == k - 1 && e.to == k)
            .expect("odometry chain is complete");
        let pose = nodes[k - 1].pose.compose(&edge.relative);
        nodes.push(PoseGraphNode { cloud_id: k, pose });
    }

    Ok(PoseGraph { nodes, edges })
}

/// Multi-resolution pairwise registration: descend a cutoff ladder from
/// `voxel * coarse_multiplier` toward the configured cutoff (dividing by
/// 4 per rung), keep every rung's pose as a candidate alongside the raw
/// init, seed the final pass with the candidate that scores best at the
/// fine cutoff (highest inlier fraction, then lowest RMSE).
fn pairwise_with_ladder(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &PoseGraphParams,
    fine: &IcpParams,
) -> Result<super::icp::RegistrationResult> {
    use super::icp::{euclidean_rmse, find_correspondences};

    if params.coarse_multiplier <= params.distance_multiplier {
        return icp_with_observer(source, target, init, fine, None);
    }

    let mut candidates = vec![*init];
    let mut rung = params.coarse_multiplier;
    let mut current = *init;
    while rung > params.distance_multiplier {
        let rung_params = IcpParams {
            max_correspondence_distance: params.voxel_size * rung,
            max_iterations: 15,
            ..*fine
        };
        if let Ok(result) = icp_with_observer(source, target, &current, &rung_params, None) {
            current = result.transform;
            candidates.push(current);
        }
        rung /= 4.0;
    }

    // Score candidates at the fine cutoff.
    let tree = crate::geometry::KdTree::build(target)?;
    let mut best = *init;
    let mut best_key = (0usize, f64::INFINITY);
    for candidate in &candidates {
        let corr = find_correspondences(source, target, &tree, candidate, fine);
        let rmse = euclidean_rmse(source, target, &corr, candidate);
        let key = (corr.len(), rmse);
        if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best_key = key;
            best = *candidate;
        }
    }
    icp_with_observer(source, target, &best, fine, None)
}

#[derive(Debug, Clone)]
pub struct PoseGraphSolution {
    pub poses: Vec<RigidTransform>,
    pub converged: bool,
    /// Indices (into the input graph's edge list) of pruned loop closures.
    pub pruned_edges: Vec<usize>,
}

const LM_MAX_ITERATIONS: usize = 100;
const LM_LAMBDA_INIT: f64 = 1e-4;
const OUTER_MAX_ROUNDS: usize = 6;

/// Robust pose-graph optimization. `edge_prune_threshold` is the
/// translational residual (meters) above which a converged loop closure
/// is discarded; it also sets the line-process scale `mu = threshold^2`.
pub fn optimize_pose_graph(
    graph: &PoseGraph,
    edge_prune_threshold: f64,
) -> Result<PoseGraphSolution> {
    graph.validate()?;
    if !(edge_prune_threshold > 0.0) {
        return Err(Error::InvalidParameter(
            "edge_prune_threshold must be > 0".into(),
        ));
    }
    if graph.nodes.is_empty() {
        return Err(Error::EmptyInput("pose graph has no nodes"));
    }
    if graph.nodes.len() == 1 {
        return Ok(PoseGraphSolution {
            poses: vec![RigidTransform::identity()],
            converged: true,
            pruned_edges: Vec::new(),
        });
    }

    let mut active: Vec<usize> = (0..graph.edges.len()).collect();
    let mut poses: Vec<RigidTransform> = graph.nodes.iter().map(|n| n.pose).collect();
    let mut pruned = Vec::new();
    let mut converged = true;

    for round in 0..2 {
        let edges: Vec<&PoseGraphEdge> = active.iter().map(|&e| &graph.edges[e]).collect();
        converged = optimize_with_line_process(&edges, &mut poses, edge_prune_threshold);

        if round == 1 {
            break;
        }
        // Prune loop closures whose translational residual exceeds the
        // threshold, then re-run once.
        let survivors: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&e| {
                let edge = &graph.edges[e];
                if edge.kind == EdgeKind::Odometry {
                    return true;
                }
                let r = edge_residual(edge, &poses);
                let r_t = Vector6::new(0.0, 0.0, 0.0, r[3], r[4], r[5]).norm();
                if r_t > edge_prune_threshold {
                    pruned.push(e);
                    false
                } else {
                    true
                }
            })
            .collect();
        if survivors.len() == active.len() {
            break; // nothing pruned; current solution stands
        }
        active = survivors;
    }

    Ok(PoseGraphSolution {
        poses,
        converged,
        pruned_edges: pruned,
    })
}

fn edge_residual(edge: &PoseGraphEdge, poses: &[RigidTransform]) -> Vector6<f64> {
    let e = edge
        .relative
        .inverse()
        .compose(&poses[edge.from].inverse())
        .compose(&poses[edge.to]);
    se3::log(&e)
}

/// Alternates LM pose updates with closed-form line-process weights
/// `w = (mu / (mu + r_t^2))^2` on loop closures. Returns convergence.
fn optimize_with_line_process(
    edges: &[&PoseGraphEdge],
    poses: &mut Vec<RigidTransform>,
    prune_threshold: f64,
) -> bool {
    let mu = prune_threshold * prune_threshold;
    let mut weights: Vec<f64> = edges.iter().map(|_| 1.0).collect();
    let mut converged = false;
    for _round in 0..OUTER_MAX_ROUNDS {
        converged = levenberg_marquardt(edges, &weights, poses);
        let mut max_change = 0.0f64;
        for (idx, edge) in edges.iter().enumerate() {
            if edge.kind == EdgeKind::Odometry {
                continue;
            }
            let r = edge_residual(edge, poses);
            let r_t2 = r[3] * r[3] + r[4] * r[4] + r[5] * r[5];
            let w = (mu / (mu + r_t2)).powi(2);
            max_change = max_change.max((w - weights[idx]).abs());
            weights[idx] = w;
        }
        if max_change < 1e-9 {
            break;
        }
    }
    converged
}

fn total_cost(edges: &[&PoseGraphEdge], weights: &[f64], poses: &[RigidTransform]) -> f64 {
    edges
        .iter()
        .zip(weights)
        .map(|(edge, w)| {
            let r = edge_residual(edge, poses);
            w * edge.confidence * (r.transpose() * edge.information * r)[(0, 0)]
        })
        .sum()
}

/// Dense LM over the twists of nodes 1..n (node 0 fixed), with numerical
/// edge Jacobians under right perturbation `T <- T exp(delta)`.
fn levenberg_marquardt(
    edges: &[&PoseGraphEdge],
    weights: &[f64],
    poses: &mut Vec<RigidTransform>,
) -> bool {
    let n = poses.len();
    let vars = 6 * (n - 1);
    let mut lambda = LM_LAMBDA_INIT;
    let mut cost = total_cost(edges, weights, poses);

    for _iter in 0..LM_MAX_ITERATIONS {
        let mut h = nalgebra::DMatrix::<f64>::zeros(vars, vars);
        let mut g = nalgebra::DVector::<f64>::zeros(vars);

        for (edge, &w) in edges.iter().zip(weights) {
            let weight = w * edge.confidence;
            if weight <= 1e-300 {
                continue;
            }
            let r = edge_residual(edge, poses);
            let j_from = numerical_jacobian(edge, poses, edge.from);
            let j_to = numerical_jacobian(edge, poses, edge.to);
            let blocks = [(edge.from, &j_from), (edge.to, &j_to)];
            for (node_a, j_a) in blocks {
                if node_a == 0 {
                    continue;
                }
                let row_a = 6 * (node_a - 1);
                let ga = j_a.transpose() * edge.information * r * weight;
                for k in 0..6 {
                    g[row_a + k] += ga[k];
                }
                for (node_b, j_b) in blocks {
                    if node_b == 0 {
                        continue;
                    }
                    let col_b = 6 * (node_b - 1);
                    let hab = j_a.transpose() * edge.information * *j_b * weight;
                    for rr in 0..6 {
                        for cc in 0..6 {
                            h[(row_a + rr, col_b + cc)] += hab[(rr, cc)];
                        }
                    }
                }
            }
        }

        if g.amax() < 1e-14 {
            return true;
        }

        let mut stepped = false;
        for _ in 0..20 {
            let mut damped = h.clone();
            for d in 0..vars {
                damped[(d, d)] += lambda * (1.0 + h[(d, d)].abs());
            }
            let delta = match damped.cholesky() {
                Some(chol) => chol.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = poses.clone();
            for k in 1..n {
                let xi = Vector6::from_fn(|r_, _| delta[6 * (k - 1) + r_]);
                trial[k] = trial[k].compose(&se3::exp(&xi)).renormalized();
            }
            let trial_cost = total_cost(edges, weights, &trial);
            if trial_cost <= cost {
                let improvement = cost - trial_cost;
                *poses = trial;
                let step = delta.amax();
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                if step < 1e-13 || improvement <= 1e-16 * cost.max(1e-300) {
                    return true;
                }
                stepped = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                return true; // damping saturated at a stationary point
            }
        }
        if !stepped {
            return true;
        }
    }
    false
}

/// Central-difference Jacobian of the edge residual with respect to the
/// right-perturbation twist of `node`.
fn numerical_jacobian(
    edge: &PoseGraphEdge,
    poses: &[RigidTransform],
    node: usize,
) -> Matrix6<f64> {
    let h = 1e-6;
    let mut jac = Matrix6::<f64>::zeros();
    for k in 0..6 {
        let mut xi = Vector6::zeros();
        xi[k] = h;
        let plus = perturbed_residual(edge, poses, node, &xi);
        xi[k] = -h;
        let minus = perturbed_residual(edge, poses, node, &xi);
        let column = (plus - minus) / (2.0 * h);
        jac.set_column(k, &column);
    }
    jac
}

fn perturbed_residual(
    edge: &PoseGraphEdge,
    poses: &[RigidTransform],
    node: usize,
    xi: &Vector6<f64>,
) -> Vector6<f64> {
    let delta = se3::exp(xi);
    let t_from = if node == edge.from {
        poses[edge.from].compose(&delta)
    } else {
        poses[edge.from]
    };
    let t_to = if node == edge.to {
        poses[edge.to].compose(&delta)
    } else {
        poses[edge.to]
    };
    let e = edge
        .relative
        .inverse()
        .compose(&t_from.inverse())
        .compose(&t_to);
    se3::log(&e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use nalgebra::Vector3;

    fn random_pose(rng: &mut SeededRng, t_scale: f64, r_scale: f64) -> RigidTransform {
        let axis = rng.unit_vector();
        let angle = rng.uniform_in(-r_scale, r_scale);
        let t = rng.unit_vector() * rng.uniform_in(0.0, t_scale);
        RigidTransform::from_axis_angle(&axis, angle, t)
    }

    fn chain_graph(n: usize, with_loops: bool, rng: &mut SeededRng) -> (PoseGraph, Vec<RigidTransform>) {
        // Ground-truth poses in the node-0 gauge.
        let mut gt = vec![RigidTransform::identity()];
        for _ in 1..n {
            let step = random_pose(rng, 0.1, 0.4);
            let last = *gt.last().unwrap();
            gt.push(last.compose(&step));
        }
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push(PoseGraphEdge {
                from: i,
                to: i + 1,
                relative: gt[i].inverse().compose(&gt[i + 1]),
                information: Matrix6::identity(),
                kind: EdgeKind::Odometry,
                confidence: 1.0,
            });
        }
        if with_loops {
            for i in 0..n - 2 {
                edges.push(PoseGraphEdge {
                    from: i,
                    to: i + 2,
                    relative: gt[i].inverse().compose(&gt[i + 2]),
                    information: Matrix6::identity(),
                    kind: EdgeKind::LoopClosure,
                    confidence: 1.0,
                });
            }
        }
        let nodes = (0..n)
            .map(|k| PoseGraphNode {
                cloud_id: k,
                pose: gt[k],
            })
            .collect();
        (PoseGraph { nodes, edges }, gt)
    }

    #[test]
    fn consistent_graph_reproduces_chain_composition() {
        let mut rng = SeededRng::new(41);
        let (graph, gt) = chain_graph(6, true, &mut rng);
        let solution = optimize_pose_graph(&graph, 0.001).unwrap();
        assert!(solution.pruned_edges.is_empty());
        for (got, want) in solution.poses.iter().zip(&gt) {
            assert!(
                (got.to_matrix() - want.to_matrix()).norm() < 1e-9,
                "pose error {}",
                (got.to_matrix() - want.to_matrix()).norm()
            );
        }
    }

    #[test]
    fn single_node_graph_returns_identity() {
        let graph = PoseGraph {
            nodes: vec![PoseGraphNode {
                cloud_id: 0,
                pose: RigidTransform::identity(),
            }],
            edges: Vec::new(),
        };
        let solution = optimize_pose_graph(&graph, 0.001).unwrap();
        assert_eq!(solution.poses.len(), 1);
        assert_eq!(solution.poses[0], RigidTransform::identity());
    }

    #[test]
    fn corrupted_loop_closure_is_pruned_and_harmless() {
        let mut rng = SeededRng::new(43);
        let (mut graph, gt) = chain_graph(8, true, &mut rng);
        // Corrupt one loop closure by a meter.
        let bad_edge = graph
            .edges
            .iter()
            .position(|e| e.kind == EdgeKind::LoopClosure)
            .unwrap();
        graph.edges[bad_edge].relative = graph.edges[bad_edge]
            .relative
            .compose(&RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0)));

        let solution = optimize_pose_graph(&graph, 0.001).unwrap();
        assert!(
            solution.pruned_edges.contains(&bad_edge),
            "bad edge not pruned: {:?}",
            solution.pruned_edges
        );
        for (got, want) in solution.poses.iter().zip(&gt) {
            assert!(
                (got.to_matrix() - want.to_matrix()).norm() < 1e-6,
                "pose error {}",
                (got.to_matrix() - want.to_matrix()).norm()
            );
        }
    }

    #[test]
    fn validate_rejects_mislabeled_edges() {
        let mut rng = SeededRng::new(44);
        let (mut graph, _) = chain_graph(4, false, &mut rng);
        graph.edges[0].kind = EdgeKind::LoopClosure; // consecutive pair
        assert!(graph.validate().is_err());
    }

    #[test]
    fn optimization_recovers_from_noisy_initialization() {
        let mut rng = SeededRng::new(45);
        let (graph, gt) = chain_graph(7, true, &mut rng);
        let mut noisy = graph.clone();
        for k in 1..noisy.nodes.len() {
            let jitter = random_pose(&mut rng, 0.05, 0.1);
            noisy.nodes[k].pose = noisy.nodes[k].pose.compose(&jitter);
        }
        let solution = optimize_pose_graph(&noisy, 0.01).unwrap();
        for (got, want) in solution.poses.iter().zip(&gt) {
            assert!(
                (got.to_matrix() - want.to_matrix()).norm() < 1e-6,
                "pose error {}",
                (got.to_matrix() - want.to_matrix()).norm()
            );
        }
    }
}
