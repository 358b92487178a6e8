//! `register` — align partial scans into a fused cloud.

use std::path::PathBuf;

use clap::Args;
use scanfuse::geometry::apply_transform;
use scanfuse::io::{read_ply, read_poses, write_ply, write_poses, PlyFormat, PlyPrecision};
use scanfuse::registration::{register_multiview, IcpMethod, MultiviewMethod, PoseGraphParams};
use scanfuse::{Error, PointCloud, Result};

use crate::{scale_cloud, Unit};

#[derive(Args)]
pub struct RegisterArgs {
    /// global-icp | pose-graph | refined-pose-graph
    #[arg(long, value_enum)]
    method: MethodCli,
    #[arg(long, default_value_t = 0.002)]
    voxel_size: f64,
    /// Correspondence cutoff = voxel_size * distance-mult (m in [1,4]).
    #[arg(long, default_value_t = 2.0)]
    distance_mult: f64,
    /// Edge prune threshold = voxel_size / prune-div (p in [2,4]).
    #[arg(long, default_value_t = 3.0)]
    prune_div: f64,
    /// Initial poses (JSON array of row-major 4x4), one per scan.
    #[arg(long)]
    init: PathBuf,
    /// Output fused cloud.
    #[arg(long)]
    out: PathBuf,
    /// Output estimated poses.
    #[arg(long)]
    out_poses: PathBuf,
    #[arg(long, value_enum, default_value_t = Unit::M)]
    unit: Unit,
    /// Clouds below this size skip voxel downsampling (0 = always
    /// downsample).
    #[arg(long, default_value_t = 100_000)]
    downsample_min_points: usize,
    /// Input scans (.ply), in odometry order.
    #[arg(required = true)]
    scans: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MethodCli {
    GlobalIcp,
    PoseGraph,
    RefinedPoseGraph,
}

impl From<MethodCli> for MultiviewMethod {
    fn from(value: MethodCli) -> Self {
        match value {
            MethodCli::GlobalIcp => MultiviewMethod::GlobalIcp,
            MethodCli::PoseGraph => MultiviewMethod::PoseGraph,
            MethodCli::RefinedPoseGraph => MultiviewMethod::RefinedPoseGraph,
        }
    }
}

pub fn run(args: RegisterArgs) -> Result<()> {
    let scale = args.unit.to_meters();
    let clouds: Vec<PointCloud> = args
        .scans
        .iter()
        .map(|path| {
            let mut cloud = read_ply(path)?;
            scale_cloud(&mut cloud, scale);
            Ok(cloud)
        })
        .collect::<Result<_>>()?;
    let init = read_poses(&args.init)?;
    if init.len() != clouds.len() {
        return Err(Error::SizeMismatch {
            left: clouds.len(),
            right: init.len(),
        });
    }

    // Parameter flags are always meters; --unit only rescales file data.
    let params = PoseGraphParams {
        voxel_size: args.voxel_size,
        distance_multiplier: args.distance_mult,
        prune_divisor: args.prune_div,
        method: IcpMethod::PointToPlane,
        downsample_min_points: args.downsample_min_points,
        ..PoseGraphParams::default()
    };
    let method: MultiviewMethod = args.method.into();
    let poses = register_multiview(&clouds, &init, method, &params)?;

    // Fused cloud: every scan expressed at its estimated pose.
    let mut fused = PointCloud::default();
    let mut fused_normals = Vec::new();
    let mut all_have_normals = true;
    for (cloud, pose) in clouds.iter().zip(&poses) {
        let moved = apply_transform(cloud, pose);
        fused.points.extend_from_slice(&moved.points);
        match moved.normals {
            Some(ns) => fused_normals.extend(ns),
            None => all_have_normals = false,
        }
    }
    if all_have_normals {
        fused.normals = Some(fused_normals);
    }
    write_ply(
        &args.out,
        &fused,
        PlyFormat::BinaryLittleEndian,
        PlyPrecision::Float64,
        None,
    )?;
    write_poses(&args.out_poses, &poses)?;
    eprintln!(
        "registered {} scans with {} -> {} ({} points)",
        clouds.len(),
        method.name(),
        args.out.display(),
        fused.len()
    );
    Ok(())
}
