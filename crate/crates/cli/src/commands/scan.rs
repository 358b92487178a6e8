//! `scan` — ray-cast partial scans with known and perturbed poses.

use std::path::PathBuf;

use clap::Args;
use scanfuse::io::{read_mesh, write_ply, write_poses, PlyFormat, PlyPrecision};
use scanfuse::scanner::{perturb_poses, render_scan_with_bvh, select_viewpoints, Bvh, CameraModel,
    ScanRecord, ScanSet};
use scanfuse::{Error, Result};

use crate::{parse_range, Unit};

#[derive(Args)]
pub struct ScanArgs {
    /// Ground-truth mesh (.obj or .stl).
    #[arg(long)]
    mesh: PathBuf,
    /// Number of viewpoints.
    #[arg(long, default_value_t = 8)]
    views: usize,
    /// Cast a ray every `stride`-th pixel in both directions.
    #[arg(long, default_value_t = 4)]
    stride: u32,
    /// Pose perturbation bracket `lo,hi` in mm and degrees.
    #[arg(long, default_value = "0,0")]
    perturb: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Unit of the input mesh coordinates.
    #[arg(long, value_enum, default_value_t = Unit::M)]
    unit: Unit,
    /// Sensor resolution, as `width,height` pixels.
    #[arg(long, default_value = "1920,1200")]
    resolution: String,
    /// Field of view, degrees, as `fovx,fovy`.
    #[arg(long, default_value = "38.70,24.75")]
    fov: String,
    /// Depth of field band, meters, as `near,far`.
    #[arg(long, default_value = "0.350,0.700")]
    dof: String,
}

pub fn run(args: ScanArgs) -> Result<()> {
    let mut mesh = read_mesh(&args.mesh)?;
    let scale = args.unit.to_meters();
    if scale != 1.0 {
        for v in &mut mesh.vertices {
            v.coords *= scale;
        }
        mesh = scanfuse::TriangleMesh::new(mesh.vertices, mesh.triangles)?;
    }

    let (w, h) = parse_range(&args.resolution)?;
    let (fx, fy) = parse_range(&args.fov)?;
    let (near, far) = parse_range(&args.dof)?;
    let camera = CameraModel {
        width: w as u32,
        height: h as u32,
        fov_x_deg: fx,
        fov_y_deg: fy,
        dof_near: near,
        dof_far: far,
    };
    camera.validate()?;
    let perturb = parse_range(&args.perturb)?;

    let bvh = Bvh::build(&mesh)?;
    let poses = select_viewpoints(&mesh, &camera, camera.mid_range(), args.views, args.seed)?;
    let records = poses
        .iter()
        .map(|pose| {
            let cloud = render_scan_with_bvh(&mesh, &bvh, pose, &camera, args.stride)?;
            Ok(ScanRecord {
                cloud,
                gt_pose: *pose,
                perturbed_pose: *pose,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scans = ScanSet {
        records,
        mesh_label: args.mesh.display().to_string(),
        seed: args.seed,
    };
    let scans = perturb_poses(&scans, perturb, perturb, args.seed)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::io(args.out_dir.display().to_string(), e))?;
    for (i, record) in scans.records.iter().enumerate() {
        write_ply(
            &args.out_dir.join(format!("scan_{i:03}.ply")),
            &record.cloud,
            PlyFormat::BinaryLittleEndian,
            PlyPrecision::Float64,
            None,
        )?;
    }
    write_poses(&args.out_dir.join("gt_poses.json"), &scans.gt_poses())?;
    write_poses(
        &args.out_dir.join("perturbed_poses.json"),
        &scans.perturbed_poses(),
    )?;
    let meta = serde_json::json!({
        "mesh": args.mesh.display().to_string(),
        "views": args.views,
        "stride": args.stride,
        "seed": args.seed,
        "camera": camera,
        "perturbation_mm_deg": [perturb.0, perturb.1],
        // Perturbations compose on the left (world frame): the scan is
        // rigidly disturbed where it sits.
        "perturbation_frame": "world",
        "scan_points": scans.records.iter().map(|r| r.cloud.len()).collect::<Vec<_>>(),
    });
    let path = args.out_dir.join("meta.json");
    std::fs::write(&path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    eprintln!(
        "wrote {} scans to {}",
        scans.records.len(),
        args.out_dir.display()
    );
    Ok(())
}
